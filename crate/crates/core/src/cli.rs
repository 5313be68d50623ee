//! Command-line front end: `fit`, `score`, `rca` and `synth`.
//!
//! Settings resolve as command-line flags, then the `--config` file, then
//! built-in defaults. The config file holds one `key = value` pair per line;
//! `#` starts a comment and keys may use `-` or `_`.
//!
//! Exit codes: 0 success, 1 other failure, 2 format or configuration error,
//! 3 insufficient data, 4 model snapshot mismatch, 5 no records for the
//! requested zone and date.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use clap::{Args, Parser, Subcommand};

use crate::detector::{self, DEFAULT_REFERENCE_DAYS, DEFAULT_SENSITIVITY, DEFAULT_TOP_PROJECTS, DEFAULT_TOP_WORDS};
use crate::error::{Error, Result};
use crate::ingest::{self, DEFAULT_MIN_DOC_FREQUENCY};
use crate::pipeline::{self, DEFAULT_WARM_UP_DAYS};
use crate::synth::{self, GeneratorConfig, InjectionSpec};
use crate::tan::{batches_by_day, DayBatch, TanConfig, TanModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_INSUFFICIENT: i32 = 3;
pub const EXIT_SNAPSHOT: i32 = 4;
pub const EXIT_NO_RECORDS: i32 = 5;

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Format(_) | Error::MissingColumn(_) | Error::Csv(_) | Error::Config(_) => EXIT_FORMAT,
        Error::InsufficientData(_) => EXIT_INSUFFICIENT,
        Error::Snapshot(_) => EXIT_SNAPSHOT,
        Error::NoRecords { .. } => EXIT_NO_RECORDS,
        _ => EXIT_OTHER,
    }
}

/// Every tunable of a run, with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub warm_up_days: usize,
    pub sensitivity: f64,
    pub top_projects: usize,
    pub top_words: usize,
    pub min_doc_frequency: u64,
    pub prior_scale: f64,
    pub reference_days: usize,
    pub stop_words: bool,
    pub generator: GeneratorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            warm_up_days: DEFAULT_WARM_UP_DAYS,
            sensitivity: DEFAULT_SENSITIVITY,
            top_projects: DEFAULT_TOP_PROJECTS,
            top_words: DEFAULT_TOP_WORDS,
            min_doc_frequency: DEFAULT_MIN_DOC_FREQUENCY,
            prior_scale: crate::dirichlet::DEFAULT_PRIOR_SCALE,
            reference_days: DEFAULT_REFERENCE_DAYS,
            stop_words: false,
            generator: GeneratorConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Sets one setting by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let g = &mut self.generator;
        match key.as_str() {
            "warm_up_days" => self.warm_up_days = parse_value(&key, v)?,
            "sensitivity" => self.sensitivity = parse_value(&key, v)?,
            "top_projects" => self.top_projects = parse_value(&key, v)?,
            "top_words" => self.top_words = parse_value(&key, v)?,
            "min_doc_frequency" => self.min_doc_frequency = parse_value(&key, v)?,
            "prior_scale" => self.prior_scale = parse_value(&key, v)?,
            "reference_days" => self.reference_days = parse_value(&key, v)?,
            "stop_words" => self.stop_words = parse_value(&key, v)?,
            "seed" => g.seed = parse_value(&key, v)?,
            "days" => g.days = parse_value(&key, v)?,
            "start_date" => g.start_date = parse_value(&key, v)?,
            "zones" => g.zones = v.split(',').map(|z| z.trim().to_string()).filter(|z| !z.is_empty()).collect(),
            "projects_per_zone" => g.projects_per_zone = parse_value(&key, v)?,
            "procedures_per_project" => g.procedures_per_project = parse_value(&key, v)?,
            "templates_per_procedure" => g.templates_per_procedure = parse_value(&key, v)?,
            "shared_templates" => g.shared_templates = parse_value(&key, v)?,
            "shared_per_procedure" => g.shared_per_procedure = parse_value(&key, v)?,
            "vocabulary_size" => g.vocabulary_size = parse_value(&key, v)?,
            "signature_tokens" => g.signature_tokens = parse_value(&key, v)?,
            "common_tokens_min" => g.common_tokens_min = parse_value(&key, v)?,
            "common_tokens_max" => g.common_tokens_max = parse_value(&key, v)?,
            "zipf_exponent" => g.zipf_exponent = parse_value(&key, v)?,
            "volume_mean" => g.volume_mean = parse_value(&key, v)?,
            "volume_shape" => g.volume_shape = parse_value(&key, v)?,
            "concentration" => g.concentration = parse_value(&key, v)?,
            _ => return Err(Error::Config(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", n + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.warm_up_days == 0 {
            return Err(Error::Config("warm_up_days must be at least 1".into()));
        }
        if self.sensitivity.is_nan() || self.sensitivity < 0.0 {
            return Err(Error::Config(format!("sensitivity must be non-negative, got {}", self.sensitivity)));
        }
        if self.top_projects == 0 || self.top_words == 0 {
            return Err(Error::Config("top_projects and top_words must be at least 1".into()));
        }
        if self.reference_days == 0 {
            return Err(Error::Config("reference_days must be at least 1".into()));
        }
        self.tan_config().validate()
    }

    pub fn tan_config(&self) -> TanConfig {
        TanConfig {
            prior_scale: self.prior_scale,
            min_doc_frequency: self.min_doc_frequency,
            stop_words: self.stop_words,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rca", version, about = "Bayesian anomaly detection and root-cause analysis for error logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model snapshot on the warm-up window (or through --train-until).
    Fit(FitArgs),
    /// Score each day with a model trained on the preceding days.
    Score(ScoreArgs),
    /// Explain one zone-day with project and keyword impacts.
    Rca(RcaArgs),
    /// Write a synthetic corpus and its ground-truth manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Flat `key = value` settings file; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    warm_up_days: Option<usize>,
    #[arg(long)]
    min_doc_frequency: Option<u64>,
    #[arg(long)]
    prior_scale: Option<f64>,
    /// Drop common English function words from messages.
    #[arg(long)]
    stop_words: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "CSV")]
    input: PathBuf,
    /// Snapshot path to write.
    #[arg(long, value_name = "JSON")]
    output: PathBuf,
    /// Also fold in every day up to and including this date.
    #[arg(long, value_name = "YYYY-MM-DD")]
    train_until: Option<NaiveDate>,
    /// Write rejected input rows to this CSV.
    #[arg(long, value_name = "CSV")]
    rejected: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "CSV")]
    input: PathBuf,
    #[arg(long, value_name = "JSON")]
    model: PathBuf,
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    #[arg(long)]
    sensitivity: Option<f64>,
    /// Write the model after folding in every scored day.
    #[arg(long, value_name = "JSON")]
    save_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RcaArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "CSV")]
    input: PathBuf,
    #[arg(long, value_name = "JSON")]
    model: PathBuf,
    #[arg(long, value_name = "YYYY-MM-DD")]
    date: NaiveDate,
    #[arg(long)]
    zone: String,
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    #[arg(long)]
    top_projects: Option<usize>,
    #[arg(long)]
    top_words: Option<usize>,
    #[arg(long)]
    reference_days: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<u32>,
    /// Comma-separated zone names.
    #[arg(long)]
    zones: Option<String>,
    #[arg(long)]
    projects_per_zone: Option<usize>,
    #[arg(long)]
    procedures_per_project: Option<usize>,
    #[arg(long)]
    vocabulary_size: Option<usize>,
    #[arg(long)]
    volume_mean: Option<f64>,
    #[arg(long)]
    volume_shape: Option<f64>,
    #[arg(long, value_name = "YYYY-MM-DD")]
    start_date: Option<NaiveDate>,
    /// Volume spike, ZONE:PROJECT:DAY:FACTOR (day is 1-based).
    #[arg(long, value_name = "SPEC")]
    spike: Vec<String>,
    /// Template swap, ZONE:PROCEDURE_A:PROCEDURE_B:DAY:FRACTION.
    #[arg(long, value_name = "SPEC")]
    swap: Vec<String>,
    /// Novel token, ZONE:PROCEDURE:DAY:PROBABILITY[:TOKEN].
    #[arg(long, value_name = "SPEC")]
    new_keyword: Vec<String>,
}

fn load_config(arg: &ConfigArg) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = &arg.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        config.apply_file_text(&text)?;
    }
    Ok(config)
}

fn apply_model_args(config: &mut RunConfig, args: &ModelArgs) {
    if let Some(v) = args.warm_up_days {
        config.warm_up_days = v;
    }
    if let Some(v) = args.min_doc_frequency {
        config.min_doc_frequency = v;
    }
    if let Some(v) = args.prior_scale {
        config.prior_scale = v;
    }
    if args.stop_words {
        config.stop_words = true;
    }
}

fn read_input(path: &Path, rejected: Option<&Path>) -> Result<ingest::ParsedLog> {
    let parsed = ingest::read_csv_file(path)?;
    if !parsed.rejected.is_empty() {
        eprintln!("{} row(s) rejected from {}", parsed.rejected.len(), path.display());
    }
    if let Some(out) = rejected {
        ingest::write_rejected(&parsed.rejected, BufWriter::new(File::create(out)?))?;
    }
    Ok(parsed)
}

fn load_model(path: &Path) -> Result<TanModel> {
    let file = File::open(path).map_err(|e| Error::Snapshot(format!("cannot open {}: {e}", path.display())))?;
    TanModel::read_snapshot(std::io::BufReader::new(file))
}

fn write_model(model: &TanModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    model.write_snapshot(&mut w)?;
    w.flush()?;
    Ok(())
}

fn file_safe(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let mut config = load_config(&args.config)?;
    apply_model_args(&mut config, &args.model);
    config.validate()?;
    let parsed = read_input(&args.input, args.rejected.as_deref())?;
    let tan = config.tan_config();
    let batches = batches_by_day(&parsed.records, &tan)?;
    let mut model = pipeline::warm_up(tan, &batches, config.warm_up_days)?;
    if let Some(until) = args.train_until {
        pipeline::train_through(&mut model, &batches, until)?;
    }
    write_model(&model, &args.output)?;
    let horizon = model.horizon().map_or_else(|| "-".to_string(), |d| d.to_string());
    println!("trained through {horizon}; zones: {}", model.zones().collect::<Vec<_>>().join(", "));
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(s) = args.sensitivity {
        config.sensitivity = s;
    }
    config.validate()?;
    let model = load_model(&args.model)?;
    let parsed = read_input(&args.input, None)?;
    let batches = batches_by_day(&parsed.records, &model.config)?;
    let run = pipeline::roll(model, &batches)?;
    fs::create_dir_all(&args.output_dir)?;
    for s in &run.series {
        let name = format!("scores_{}_{}.csv", file_safe(&s.zone), s.kind);
        detector::write_series_csv(std::slice::from_ref(s), BufWriter::new(File::create(args.output_dir.join(name))?))?;
    }
    let (flags, skipped) = pipeline::flag_all(&run.series, config.sensitivity)?;
    for (zone, kind) in &skipped {
        eprintln!("series {zone}/{kind} is shorter than {} days; not flagged", detector::MIN_SERIES_LEN);
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(args.output_dir.join("flags.csv"))?));
    w.write_record(["date", "zone", "kind", "score", "threshold"])?;
    for f in &flags {
        w.write_record([
            f.date.to_string(),
            f.zone.clone(),
            f.kind.to_string(),
            f.score.to_string(),
            f.threshold.to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(path) = &args.save_model {
        write_model(&run.model, path)?;
    }
    println!("scored {} day(s); {} flag(s)", run.horizons.len(), flags.len());
    for f in &flags {
        println!("flag {} {} {} score {:.6} < {:.6}", f.date, f.zone, f.kind, f.score, f.threshold);
    }
    Ok(())
}

fn cmd_rca(args: RcaArgs) -> Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(v) = args.top_projects {
        config.top_projects = v;
    }
    if let Some(v) = args.top_words {
        config.top_words = v;
    }
    if let Some(v) = args.reference_days {
        config.reference_days = v;
    }
    config.validate()?;
    let mut model = load_model(&args.model)?;
    if let Some(h) = model.horizon() {
        if args.date <= h {
            return Err(Error::Config(format!("model is trained through {h}; pick a later date than that")));
        }
    }
    let parsed = read_input(&args.input, None)?;
    let batches = batches_by_day(&parsed.records, &model.config)?;
    let day = batches
        .iter()
        .find(|b| b.date == args.date)
        .ok_or_else(|| Error::NoRecords { zone: args.zone.clone(), date: args.date })?;
    if let Some(previous) = args.date.checked_sub_days(Days::new(1)) {
        pipeline::train_through(&mut model, &batches, previous)?;
    }

    let first = batches.first().map_or(args.date, |b| b.date);
    let mut window = Vec::new();
    for back in (1..=config.reference_days as u64).rev() {
        let Some(d) = args.date.checked_sub_days(Days::new(back)) else { continue };
        if d < first {
            continue;
        }
        window.push(batches.iter().find(|b| b.date == d).cloned().unwrap_or_else(|| DayBatch::empty(d)));
    }
    let reference: Vec<&DayBatch> = window.iter().collect();

    let project = detector::project_rca(&model, day, &args.zone, config.top_projects)?;
    let procedure = detector::procedure_rca(&model, day, &args.zone, config.top_words, &reference)?;
    fs::create_dir_all(&args.output_dir)?;
    let stem = format!("rca_{}_{}", file_safe(&args.zone), args.date);
    for report in [&project, &procedure] {
        let base = args.output_dir.join(format!("{stem}_{}", report.kind));
        fs::write(base.with_extension("txt"), report.render_text())?;
        fs::write(base.with_extension("json"), report.to_json()?)?;
        let top: Vec<&str> = report.ranked_items.iter().map(|i| i.label.as_str()).collect();
        println!(
            "{} {}: deficiency {:.6}; top: {}",
            report.kind,
            base.with_extension("txt").display(),
            report.deficiency,
            top.join(", ")
        );
    }
    Ok(())
}

fn split_spec<'a>(raw: &'a str, min: usize, max: usize, shape: &str) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() < min || parts.len() > max {
        return Err(Error::Config(format!("injection `{raw}` must look like {shape}")));
    }
    Ok(parts)
}

fn parse_injections(args: &SynthArgs) -> Result<Vec<InjectionSpec>> {
    let mut out = Vec::new();
    for raw in &args.spike {
        let p = split_spec(raw, 4, 4, "ZONE:PROJECT:DAY:FACTOR")?;
        out.push(InjectionSpec::RateSpike {
            zone: p[0].into(),
            project: p[1].into(),
            day: parse_value("spike day", p[2])?,
            factor: parse_value("spike factor", p[3])?,
        });
    }
    for raw in &args.swap {
        let p = split_spec(raw, 5, 5, "ZONE:PROCEDURE_A:PROCEDURE_B:DAY:FRACTION")?;
        out.push(InjectionSpec::MessageSwap {
            zone: p[0].into(),
            procedure_a: p[1].into(),
            procedure_b: p[2].into(),
            day: parse_value("swap day", p[3])?,
            fraction: parse_value("swap fraction", p[4])?,
        });
    }
    for raw in &args.new_keyword {
        let p = split_spec(raw, 4, 5, "ZONE:PROCEDURE:DAY:PROBABILITY[:TOKEN]")?;
        out.push(InjectionSpec::NewKeyword {
            zone: p[0].into(),
            procedure: p[1].into(),
            day: parse_value("keyword day", p[2])?,
            probability: parse_value("keyword probability", p[3])?,
            token: p.get(4).map(|t| t.to_lowercase()),
        });
    }
    Ok(out)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut config = load_config(&args.config)?;
    let g = &mut config.generator;
    if let Some(v) = args.seed {
        g.seed = v;
    }
    if let Some(v) = args.days {
        g.days = v;
    }
    if let Some(v) = &args.zones {
        config.set("zones", v)?;
    }
    let g = &mut config.generator;
    if let Some(v) = args.projects_per_zone {
        g.projects_per_zone = v;
    }
    if let Some(v) = args.procedures_per_project {
        g.procedures_per_project = v;
    }
    if let Some(v) = args.vocabulary_size {
        g.vocabulary_size = v;
    }
    if let Some(v) = args.volume_mean {
        g.volume_mean = v;
    }
    if let Some(v) = args.volume_shape {
        g.volume_shape = v;
    }
    if let Some(v) = args.start_date {
        g.start_date = v;
    }
    config.generator.validate()?;
    let injections = parse_injections(&args)?;
    let (records, manifest) = synth::synthesize(&config.generator, &injections).map_err(|e| match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    })?;
    fs::create_dir_all(&args.output_dir)?;
    ingest::write_csv(&records, BufWriter::new(File::create(args.output_dir.join("corpus.csv"))?))?;
    let mut w = BufWriter::new(File::create(args.output_dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.flush()?;
    println!("wrote {} record(s) over {} day(s)", records.len(), config.generator.days);
    for inj in &manifest.injections {
        if let Some(token) = &inj.token {
            println!("injected {} on {} (token `{token}`)", kind_name(&inj.spec), inj.date);
        } else {
            println!("injected {} on {}", kind_name(&inj.spec), inj.date);
        }
    }
    Ok(())
}

fn kind_name(spec: &InjectionSpec) -> &'static str {
    match spec {
        InjectionSpec::RateSpike { .. } => "rate_spike",
        InjectionSpec::MessageSwap { .. } => "message_swap",
        InjectionSpec::NewKeyword { .. } => "new_keyword",
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Score(a) => cmd_score(a),
        Command::Rca(a) => cmd_rca(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing_and_precedence() {
        let mut c = RunConfig::default();
        c.apply_file_text("# comment\nsensitivity = 2.5\nwarm-up-days=7  # inline\n\nzones = A, B\n").unwrap();
        assert_eq!(c.sensitivity, 2.5);
        assert_eq!(c.warm_up_days, 7);
        assert_eq!(c.generator.zones, vec!["A".to_string(), "B".to_string()]);
        apply_model_args(
            &mut c,
            &ModelArgs { warm_up_days: Some(9), min_doc_frequency: None, prior_scale: None, stop_words: false },
        );
        assert_eq!(c.warm_up_days, 9);
        assert_eq!(c.min_doc_frequency, DEFAULT_MIN_DOC_FREQUENCY);
    }

    #[test]
    fn config_errors() {
        let mut c = RunConfig::default();
        assert!(matches!(c.apply_file_text("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(c.apply_file_text("sensitivity = lots"), Err(Error::Config(_))));
        assert!(matches!(c.apply_file_text("just words"), Err(Error::Config(_))));
        c.warm_up_days = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn exit_code_map() {
        assert_eq!(exit_code(&Error::MissingColumn("x".into())), 2);
        assert_eq!(exit_code(&Error::InsufficientData("x".into())), 3);
        assert_eq!(exit_code(&Error::Snapshot("x".into())), 4);
        let date = NaiveDate::from_ymd_opt(2018, 4, 1).unwrap();
        assert_eq!(exit_code(&Error::NoRecords { zone: "Z".into(), date }), 5);
        assert_eq!(exit_code(&Error::UnknownZone("Z".into())), 1);
    }

    #[test]
    fn injection_flags() {
        let args = SynthArgs::try_parse_from_for_test(&[
            "--output-dir",
            "x",
            "--spike",
            "EMEA:P01:60:10",
            "--swap",
            "APJ:P01.R1:P02.R1:30:1.0",
            "--new-keyword",
            "EMEA:P01.R1:40:0.5:Zzqx",
        ]);
        let specs = parse_injections(&args).unwrap();
        assert_eq!(specs.len(), 3);
        assert_eq!(
            specs[2],
            InjectionSpec::NewKeyword {
                zone: "EMEA".into(),
                procedure: "P01.R1".into(),
                day: 40,
                probability: 0.5,
                token: Some("zzqx".into())
            }
        );
        let bad = SynthArgs::try_parse_from_for_test(&["--output-dir", "x", "--spike", "EMEA:P01:60"]);
        assert!(matches!(parse_injections(&bad), Err(Error::Config(_))));
    }

    impl SynthArgs {
        fn try_parse_from_for_test(rest: &[&str]) -> Self {
            let mut argv = vec!["rca", "synth"];
            argv.extend_from_slice(rest);
            match Cli::try_parse_from(argv).unwrap().command {
                Command::Synth(a) => a,
                other => panic!("unexpected {other:?}"),
            }
        }
    }
}
