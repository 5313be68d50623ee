//! Synthetic log corpora sampled from the zone → project → procedure →
//! message hierarchy, with anomaly injection and a ground-truth manifest.
//!
//! Randomness comes from ChaCha8 seeded with the corpus seed. Each
//! independent piece of work draws from its own stream, with stream id
//!
//! ```text
//! purpose << 56 | day << 32 | zone << 16 | sub
//! ```
//!
//! so a day can be regenerated without replaying earlier days.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Days, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LogRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub zones: Vec<String>,
    pub projects_per_zone: usize,
    pub procedures_per_project: usize,
    /// Procedure-specific templates, each carrying the procedure's signature.
    pub templates_per_procedure: usize,
    /// Zone-wide generic templates without signature tokens.
    pub shared_templates: usize,
    /// Generic templates each procedure emits besides its own.
    pub shared_per_procedure: usize,
    pub vocabulary_size: usize,
    /// Tokens shared by every template of a procedure and by no other procedure.
    pub signature_tokens: usize,
    pub common_tokens_min: usize,
    pub common_tokens_max: usize,
    /// Exponent of the rank weights used to pick common tokens.
    pub zipf_exponent: f64,
    /// Mean daily error count per zone.
    pub volume_mean: f64,
    /// Gamma shape of the daily volume; smaller means more over-dispersion.
    pub volume_shape: f64,
    /// Symmetric Dirichlet concentration of every latent categorical.
    pub concentration: f64,
    pub days: u32,
    pub start_date: NaiveDate,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            zones: vec!["EMEA".into(), "APJ".into()],
            projects_per_zone: 10,
            procedures_per_project: 3,
            templates_per_procedure: 3,
            shared_templates: 6,
            shared_per_procedure: 2,
            vocabulary_size: 200,
            signature_tokens: 2,
            common_tokens_min: 2,
            common_tokens_max: 6,
            zipf_exponent: 1.0,
            volume_mean: 2000.0,
            volume_shape: 50.0,
            concentration: 2.0,
            days: 120,
            start_date: NaiveDate::from_ymd_opt(2018, 4, 1).expect("valid date"),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.zones.is_empty() {
            return bad("at least one zone is required".into());
        }
        if self.zones.iter().collect::<BTreeSet<_>>().len() != self.zones.len() {
            return bad("zone names must be unique".into());
        }
        if self.zones.iter().any(|z| z.is_empty()) {
            return bad("zone names must be non-empty".into());
        }
        for (name, v) in [
            ("projects_per_zone", self.projects_per_zone),
            ("procedures_per_project", self.procedures_per_project),
            ("templates_per_procedure", self.templates_per_procedure),
            ("vocabulary_size", self.vocabulary_size),
            ("signature_tokens", self.signature_tokens),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        if self.shared_per_procedure > self.shared_templates {
            return bad("shared_per_procedure exceeds shared_templates".into());
        }
        if self.common_tokens_min > self.common_tokens_max {
            return bad("common_tokens_min exceeds common_tokens_max".into());
        }
        let signatures = self.projects_per_zone * self.procedures_per_project * self.signature_tokens;
        if self.vocabulary_size < signatures + self.common_tokens_max {
            return bad(format!(
                "vocabulary_size {} is too small: {signatures} signature tokens plus {} common tokens are needed",
                self.vocabulary_size, self.common_tokens_max
            ));
        }
        for (name, v) in [
            ("volume_mean", self.volume_mean),
            ("volume_shape", self.volume_shape),
            ("concentration", self.concentration),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent < 0.0 {
            return bad(format!("zipf_exponent must be non-negative, got {}", self.zipf_exponent));
        }
        Ok(())
    }

    /// Calendar date of 1-based `day`.
    pub fn date_of(&self, day: u32) -> NaiveDate {
        self.start_date + Days::new(u64::from(day.saturating_sub(1)))
    }

    pub fn day_of(&self, date: NaiveDate) -> Option<u32> {
        let offset = (date - self.start_date).num_days();
        (0..i64::from(self.days)).contains(&offset).then(|| offset as u32 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub text: String,
    pub tokens: Vec<String>,
    pub probability: f64,
    /// Drawn from the zone-wide pool that several procedures emit.
    pub shared: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureTruth {
    pub name: String,
    /// Probability given the project.
    pub probability: f64,
    pub signature: Vec<String>,
    pub templates: Vec<Template>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectTruth {
    pub name: String,
    /// Probability given the zone.
    pub probability: f64,
    pub procedures: Vec<ProcedureTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTruth {
    pub name: String,
    pub projects: Vec<ProjectTruth>,
}

impl ZoneTruth {
    pub fn project(&self, name: &str) -> Option<&ProjectTruth> {
        self.projects.iter().find(|p| p.name == name)
    }

    /// Owning project and procedure.
    pub fn procedure(&self, name: &str) -> Option<(&ProjectTruth, &ProcedureTruth)> {
        self.projects.iter().find_map(|p| p.procedures.iter().find(|r| r.name == name).map(|r| (p, r)))
    }

    /// Template tokens of `procedures` that appear in no other procedure's templates.
    pub fn unique_tokens(&self, procedures: &[&str]) -> BTreeSet<String> {
        let mut inside = BTreeSet::new();
        let mut outside = BTreeSet::new();
        for r in self.projects.iter().flat_map(|p| &p.procedures) {
            let target = if procedures.contains(&r.name.as_str()) { &mut inside } else { &mut outside };
            for t in &r.templates {
                target.extend(t.tokens.iter().cloned());
            }
        }
        inside.difference(&outside).cloned().collect()
    }
}

/// Latent parameters the corpus is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub vocabulary: Vec<String>,
    pub zones: Vec<ZoneTruth>,
}

impl GroundTruth {
    pub fn zone(&self, name: &str) -> Option<&ZoneTruth> {
        self.zones.iter().find(|z| z.name == name)
    }

    /// Draws every latent categorical once from the config's priors.
    pub fn sample(config: &GeneratorConfig) -> Result<Self> {
        config.validate()?;
        let vocabulary =
            sample_vocabulary(&mut stream(config.seed, Purpose::Vocabulary, 0, 0, 0), config.vocabulary_size);
        let zones = config
            .zones
            .iter()
            .enumerate()
            .map(|(zi, name)| {
                let mut rng = stream(config.seed, Purpose::Latent, 0, zi, 0);
                sample_zone(&mut rng, config, name, &vocabulary)
            })
            .collect::<Result<_>>()?;
        Ok(Self { vocabulary, zones })
    }
}

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Vocabulary = 1,
    Latent = 2,
    Day = 3,
    Injection = 4,
}

fn stream(seed: u64, purpose: Purpose, day: u32, zone: usize, sub: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(
        (purpose as u64) << 56
            | (u64::from(day) & 0xff_ffff) << 32
            | (zone as u64 & 0xffff) << 16
            | (sub as u64 & 0xffff),
    );
    rng
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn syllables<R: Rng>(rng: &mut R, n: usize) -> String {
    let mut s = String::with_capacity(2 * n);
    for _ in 0..n {
        s.push(*CONSONANTS.choose(rng).expect("non-empty") as char);
        s.push(*VOWELS.choose(rng).expect("non-empty") as char);
    }
    s
}

/// Pronounceable lowercase tokens, unique, in draw order.
fn sample_vocabulary<R: Rng>(rng: &mut R, size: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let n = rng.random_range(2..=3);
        let mut token = syllables(rng, n);
        if rng.random_bool(0.15) {
            token.push(char::from(b'0' + rng.random_range(0..10u8)));
        }
        if seen.insert(token.clone()) {
            out.push(token);
        }
    }
    out
}

fn dirichlet<R: Rng>(rng: &mut R, n: usize, concentration: f64) -> Result<Vec<f64>> {
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    loop {
        let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && draws.iter().all(|d| *d > 0.0) {
            return Ok(draws.into_iter().map(|d| d / total).collect());
        }
    }
}

fn common_tokens<R: Rng>(rng: &mut R, config: &GeneratorConfig, common: &[&String]) -> Result<Vec<String>> {
    let n = rng.random_range(config.common_tokens_min..=config.common_tokens_max);
    let picked = common
        .choose_multiple_weighted(rng, n, |t| {
            let rank = common.iter().position(|c| c == t).expect("member") + 1;
            (rank as f64).powf(-config.zipf_exponent)
        })
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(picked.map(|t| t.to_string()).collect())
}

fn sample_zone<R: Rng>(rng: &mut R, config: &GeneratorConfig, name: &str, vocabulary: &[String]) -> Result<ZoneTruth> {
    let mut pool: Vec<&String> = vocabulary.iter().collect();
    pool.shuffle(rng);
    let n_signatures = config.projects_per_zone * config.procedures_per_project * config.signature_tokens;
    let (signature_pool, common) = pool.split_at(n_signatures);
    let mut signature_pool = signature_pool.iter();

    let shared: Vec<Vec<String>> =
        (0..config.shared_templates).map(|_| common_tokens(rng, config, common)).collect::<Result<_>>()?;

    let project_probs = dirichlet(rng, config.projects_per_zone, config.concentration)?;
    let mut projects = Vec::with_capacity(config.projects_per_zone);
    for (pi, &project_prob) in project_probs.iter().enumerate() {
        let project_name = format!("P{:02}", pi + 1);
        let procedure_probs = dirichlet(rng, config.procedures_per_project, config.concentration)?;
        let mut procedures = Vec::with_capacity(config.procedures_per_project);
        for (ri, &procedure_prob) in procedure_probs.iter().enumerate() {
            let signature: Vec<String> =
                signature_pool.by_ref().take(config.signature_tokens).map(|t| t.to_string()).collect();
            let mut token_lists = Vec::new();
            for _ in 0..config.templates_per_procedure {
                let mut tokens = signature.clone();
                tokens.extend(common_tokens(rng, config, common)?);
                token_lists.push((tokens, false));
            }
            for i in rand::seq::index::sample(rng, shared.len(), config.shared_per_procedure.min(shared.len())) {
                token_lists.push((shared[i].clone(), true));
            }
            let probs = dirichlet(rng, token_lists.len(), config.concentration)?;
            let templates = token_lists
                .into_iter()
                .zip(probs)
                .map(|((tokens, shared), probability)| {
                    let signature_len = if shared { 0 } else { config.signature_tokens };
                    Template { text: template_text(&tokens, signature_len), tokens, probability, shared }
                })
                .collect();
            procedures.push(ProcedureTruth {
                name: format!("{project_name}.R{}", ri + 1),
                probability: procedure_prob,
                signature,
                templates,
            });
        }
        projects.push(ProjectTruth { name: project_name, probability: project_prob, procedures });
    }
    Ok(ZoneTruth { name: name.to_string(), projects })
}

/// Signature tokens, a colon, then common tokens: "Kavo dume: reta sili".
fn template_text(tokens: &[String], signature_len: usize) -> String {
    let mut text = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            text.push_str(if i == signature_len { ": " } else { " " });
        }
        if i == 0 {
            let mut chars = t.chars();
            if let Some(c) = chars.next() {
                text.extend(c.to_uppercase());
                text.push_str(chars.as_str());
            }
        } else {
            text.push_str(t);
        }
    }
    text
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("valid poisson").sample(rng) as u64
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial<R: Rng>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let x = binomial(rng, remaining, (p / mass).clamp(0.0, 1.0));
        out[i] = x;
        remaining -= x;
        mass -= p;
    }
    out
}

fn procedure_probs(project: &ProjectTruth) -> Vec<f64> {
    project.procedures.iter().map(|r| r.probability).collect()
}

fn template_probs(procedure: &ProcedureTruth) -> Vec<f64> {
    procedure.templates.iter().map(|t| t.probability).collect()
}

/// Units of one project split into (procedure index, template index) cells.
fn split_project<R: Rng>(rng: &mut R, project: &ProjectTruth, n: u64) -> Vec<((usize, usize), u64)> {
    let mut out = Vec::new();
    for (ri, n_r) in multinomial(rng, n, &procedure_probs(project)).into_iter().enumerate() {
        let procedure = &project.procedures[ri];
        for (ti, n_t) in multinomial(rng, n_r, &template_probs(procedure)).into_iter().enumerate() {
            if n_t > 0 {
                out.push(((ri, ti), n_t));
            }
        }
    }
    out
}

fn record(date: NaiveDate, zone: &str, project: &str, procedure: &str, message: &str, err_cnt: u64) -> LogRecord {
    LogRecord {
        row_id: 0,
        date,
        region: zone.to_string(),
        project_name: project.to_string(),
        procedure_name: Some(procedure.to_string()),
        error_detail: Some(message.to_string()),
        err_cnt,
    }
}

/// Records of one 1-based day drawn with streams derived from `seed`.
pub fn simulate_day(config: &GeneratorConfig, truth: &GroundTruth, day: u32, seed: u64) -> Result<Vec<LogRecord>> {
    let date = config.date_of(day);
    let gamma = Gamma::new(config.volume_shape, config.volume_mean / config.volume_shape)
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut out = Vec::new();
    for (zi, zone) in truth.zones.iter().enumerate() {
        let mut rng = stream(seed, Purpose::Day, day, zi, 0);
        let rate = gamma.sample(&mut rng);
        let volume = poisson(&mut rng, rate);
        let project_probs: Vec<f64> = zone.projects.iter().map(|p| p.probability).collect();
        for (pi, n_p) in multinomial(&mut rng, volume, &project_probs).into_iter().enumerate() {
            let project = &zone.projects[pi];
            for ((ri, ti), n) in split_project(&mut rng, project, n_p) {
                let procedure = &project.procedures[ri];
                out.push(record(date, &zone.name, &project.name, &procedure.name, &procedure.templates[ti].text, n));
            }
        }
    }
    Ok(out)
}

/// Sums records sharing (date, zone, project, procedure, message), drops
/// empty cells, sorts, and renumbers `row_id` from 0.
pub fn normalize(records: Vec<LogRecord>) -> Vec<LogRecord> {
    type Key = (NaiveDate, String, String, Option<String>, Option<String>);
    let mut cells: BTreeMap<Key, u64> = BTreeMap::new();
    for r in records {
        *cells.entry((r.date, r.region, r.project_name, r.procedure_name, r.error_detail)).or_insert(0) += r.err_cnt;
    }
    cells
        .into_iter()
        .filter(|(_, n)| *n > 0)
        .enumerate()
        .map(|(i, ((date, region, project_name, procedure_name, error_detail), err_cnt))| LogRecord {
            row_id: i as u64,
            date,
            region,
            project_name,
            procedure_name,
            error_detail,
            err_cnt,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<LogRecord>,
    pub truth: GroundTruth,
}

/// Samples the latent parameters, then every day of the corpus.
pub fn generate(config: &GeneratorConfig) -> Result<SyntheticCorpus> {
    let truth = GroundTruth::sample(config)?;
    let mut records = Vec::new();
    for day in 1..=config.days {
        records.extend(simulate_day(config, &truth, day, config.seed)?);
    }
    Ok(SyntheticCorpus { records: normalize(records), truth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InjectionSpec {
    /// Multiplies one project's volume on `day` by `factor`.
    RateSpike { zone: String, project: String, day: u32, factor: f64 },
    /// Each unit of either procedure switches, with probability `fraction`,
    /// to a template drawn from the other procedure.
    MessageSwap { zone: String, procedure_a: String, procedure_b: String, day: u32, fraction: f64 },
    /// Each unit of `procedure` gets `token` appended with probability `probability`.
    NewKeyword { zone: String, procedure: String, day: u32, probability: f64, token: Option<String> },
}

impl InjectionSpec {
    pub fn day(&self) -> u32 {
        match self {
            InjectionSpec::RateSpike { day, .. }
            | InjectionSpec::MessageSwap { day, .. }
            | InjectionSpec::NewKeyword { day, .. } => *day,
        }
    }

    pub fn zone(&self) -> &str {
        match self {
            InjectionSpec::RateSpike { zone, .. }
            | InjectionSpec::MessageSwap { zone, .. }
            | InjectionSpec::NewKeyword { zone, .. } => zone,
        }
    }

    fn magnitude(&self) -> f64 {
        match self {
            InjectionSpec::RateSpike { factor, .. } => *factor,
            InjectionSpec::MessageSwap { fraction, .. } => *fraction,
            InjectionSpec::NewKeyword { probability, .. } => *probability,
        }
    }
}

/// Signed change to one aggregated cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDelta {
    pub date: NaiveDate,
    pub zone: String,
    pub project: String,
    pub procedure: String,
    pub message: String,
    pub delta: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedInjection {
    pub spec: InjectionSpec,
    pub date: NaiveDate,
    /// The inserted token, for keyword injections.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub token: Option<String>,
    pub deltas: Vec<CellDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: GeneratorConfig,
    pub truth: GroundTruth,
    pub injections: Vec<AppliedInjection>,
}

impl Manifest {
    /// Undoes every recorded injection at the level of aggregated cells.
    pub fn revert(&self, records: &[LogRecord]) -> Result<Vec<LogRecord>> {
        let mut cells: BTreeMap<(NaiveDate, String, String, String, String), i64> = BTreeMap::new();
        for r in normalize(records.to_vec()) {
            let key = (
                r.date,
                r.region,
                r.project_name,
                r.procedure_name.unwrap_or_default(),
                r.error_detail.unwrap_or_default(),
            );
            *cells.entry(key).or_insert(0) += r.err_cnt as i64;
        }
        for inj in self.injections.iter().rev() {
            for d in &inj.deltas {
                let key = (d.date, d.zone.clone(), d.project.clone(), d.procedure.clone(), d.message.clone());
                *cells.entry(key).or_insert(0) -= d.delta;
            }
        }
        if let Some((k, v)) = cells.iter().find(|(_, v)| **v < 0) {
            return Err(Error::Format(format!("manifest does not match records: cell {k:?} would be {v}")));
        }
        Ok(normalize(
            cells
                .into_iter()
                .map(|((date, zone, project, procedure, message), n)| {
                    record(date, &zone, &project, &procedure, &message, n as u64)
                })
                .collect(),
        ))
    }
}

fn unknown(what: &str, name: &str) -> Error {
    Error::domain(format!("unknown {what} `{name}`"))
}

/// A lowercase token absent from `vocabulary`, drawn from `rng`.
fn novel_token<R: Rng>(rng: &mut R, vocabulary: &BTreeSet<&str>) -> String {
    loop {
        let n = rng.random_range(3..=4);
        let token = format!("{}{}", syllables(rng, n), rng.random_range(10..100u32));
        if !vocabulary.contains(token.as_str()) {
            return token;
        }
    }
}

/// Applies `spec` to `records` using streams derived from `seed`.
///
/// Records are returned normalized. `index` separates the streams of
/// several injections on the same day and zone.
pub fn inject(
    config: &GeneratorConfig,
    truth: &GroundTruth,
    records: Vec<LogRecord>,
    spec: &InjectionSpec,
    seed: u64,
    index: usize,
) -> Result<(Vec<LogRecord>, AppliedInjection)> {
    let day = spec.day();
    if day == 0 || day > config.days {
        return Err(Error::domain(format!("injection day {day} outside 1..={}", config.days)));
    }
    let magnitude = spec.magnitude();
    if !magnitude.is_finite() || magnitude <= 0.0 {
        return Err(Error::domain(format!("injection magnitude must be positive, got {magnitude}")));
    }
    let zi = truth.zones.iter().position(|z| z.name == spec.zone()).ok_or_else(|| unknown("zone", spec.zone()))?;
    let zone = &truth.zones[zi];
    let date = config.date_of(day);
    let mut rng = stream(seed, Purpose::Injection, day, zi, index);
    let mut records = normalize(records);
    let mut deltas = Vec::new();
    let mut token_out = None;
    let on_target = |r: &LogRecord| r.date == date && r.region == zone.name;

    match spec {
        InjectionSpec::RateSpike { project, factor, .. } => {
            let truth_project = zone.project(project).ok_or_else(|| unknown("project", project))?;
            let hit = |r: &LogRecord| on_target(r) && r.project_name == *project;
            if *factor >= 1.0 {
                let base: u64 = records.iter().filter(|r| hit(r)).map(|r| r.err_cnt).sum();
                let extra = poisson(&mut rng, (factor - 1.0) * base as f64);
                for ((ri, ti), n) in split_project(&mut rng, truth_project, extra) {
                    let procedure = &truth_project.procedures[ri];
                    let message = &procedure.templates[ti].text;
                    records.push(record(date, &zone.name, project, &procedure.name, message, n));
                    deltas.push(delta(date, &zone.name, project, &procedure.name, message, n as i64));
                }
            } else {
                for r in records.iter_mut().filter(|r| hit(r)) {
                    let kept = binomial(&mut rng, r.err_cnt, *factor);
                    deltas.push(delta_of(r, kept as i64 - r.err_cnt as i64));
                    r.err_cnt = kept;
                }
            }
        }
        InjectionSpec::MessageSwap { procedure_a, procedure_b, fraction, .. } => {
            if procedure_a == procedure_b {
                return Err(Error::domain("message swap needs two distinct procedures"));
            }
            let (_, a) = zone.procedure(procedure_a).ok_or_else(|| unknown("procedure", procedure_a))?;
            let (_, b) = zone.procedure(procedure_b).ok_or_else(|| unknown("procedure", procedure_b))?;
            let mut added = Vec::new();
            for r in records.iter_mut().filter(|r| on_target(r)) {
                let source = match r.procedure_name.as_deref() {
                    Some(p) if p == procedure_a => b,
                    Some(p) if p == procedure_b => a,
                    _ => continue,
                };
                let moved = binomial(&mut rng, r.err_cnt, fraction.min(1.0));
                if moved == 0 {
                    continue;
                }
                deltas.push(delta_of(r, -(moved as i64)));
                r.err_cnt -= moved;
                for (ti, n) in multinomial(&mut rng, moved, &template_probs(source)).into_iter().enumerate() {
                    if n > 0 {
                        let mut swapped = r.clone();
                        swapped.error_detail = Some(source.templates[ti].text.clone());
                        swapped.err_cnt = n;
                        deltas.push(delta_of(&swapped, n as i64));
                        added.push(swapped);
                    }
                }
            }
            records.extend(added);
        }
        InjectionSpec::NewKeyword { procedure, probability, token, .. } => {
            zone.procedure(procedure).ok_or_else(|| unknown("procedure", procedure))?;
            let vocabulary: BTreeSet<&str> = truth.vocabulary.iter().map(String::as_str).collect();
            let token = match token {
                Some(t) => t.clone(),
                None => novel_token(&mut rng, &vocabulary),
            };
            let mut added = Vec::new();
            for r in records.iter_mut().filter(|r| on_target(r) && r.procedure_name.as_deref() == Some(procedure)) {
                let marked = binomial(&mut rng, r.err_cnt, probability.min(1.0));
                if marked == 0 {
                    continue;
                }
                deltas.push(delta_of(r, -(marked as i64)));
                r.err_cnt -= marked;
                let mut with_token = r.clone();
                with_token.error_detail = Some(format!("{} {token}", r.message()));
                with_token.err_cnt = marked;
                deltas.push(delta_of(&with_token, marked as i64));
                added.push(with_token);
            }
            records.extend(added);
            token_out = Some(token);
        }
    }
    Ok((normalize(records), AppliedInjection { spec: spec.clone(), date, token: token_out, deltas }))
}

fn delta(date: NaiveDate, zone: &str, project: &str, procedure: &str, message: &str, delta: i64) -> CellDelta {
    CellDelta {
        date,
        zone: zone.to_string(),
        project: project.to_string(),
        procedure: procedure.to_string(),
        message: message.to_string(),
        delta,
    }
}

fn delta_of(r: &LogRecord, d: i64) -> CellDelta {
    delta(r.date, &r.region, &r.project_name, r.procedure_label(), r.message(), d)
}

/// Generates a corpus and applies `injections` in order.
pub fn synthesize(config: &GeneratorConfig, injections: &[InjectionSpec]) -> Result<(Vec<LogRecord>, Manifest)> {
    let SyntheticCorpus { mut records, truth } = generate(config)?;
    let mut applied = Vec::with_capacity(injections.len());
    for (i, spec) in injections.iter().enumerate() {
        let (next, a) = inject(config, &truth, records, spec, config.seed, i)?;
        records = next;
        applied.push(a);
    }
    Ok((records, Manifest { config: config.clone(), truth, injections: applied }))
}
