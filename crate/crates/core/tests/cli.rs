//! End-to-end tests of the `rca` binary: exit codes, file outputs, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rca_core::ingest;
use rca_core::pipeline;
use rca_core::synth::Manifest;
use rca_core::tan::{batches_by_day, TanConfig, TanModel};
use serde_json::Value;

const HEADER: &str = "row_id,date,region,project_name,procedure_name,error_detail,err_cnt\n";

fn rca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rca")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic corpus in `dir`, returning the CSV path.
fn small_corpus(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["synth", "--output-dir", s(dir), "--seed", "11", "--days", "40", "--volume-mean", "400"];
    args.extend_from_slice(extra);
    let out = rca(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir.join("corpus.csv")
}

fn fit(corpus: &Path, model: &Path) {
    let out = rca(&["fit", "--input", s(corpus), "--output", s(model)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn header_only_input_is_insufficient_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, HEADER).unwrap();
    let out = rca(&["fit", "--input", s(&csv), "--output", s(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn missing_column_is_a_format_error_naming_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "row_id,date,region,project_name,procedure_name,error_detail\n1,2018-04-01,EMEA,P01,R1,boom\n")
        .unwrap();
    let out = rca(&["fit", "--input", s(&csv), "--output", s(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("err_cnt"), "{}", stderr(&out));
}

#[test]
fn unreadable_or_foreign_snapshot_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &[]);
    let bogus = dir.path().join("bogus.json");
    fs::write(&bogus, r#"{"format": "rca-tan-model", "version": 99, "model": {}}"#).unwrap();
    for model in [bogus.as_path(), dir.path().join("absent.json").as_path()] {
        let out = rca(&["score", "--input", s(&corpus), "--model", s(model), "--output-dir", s(dir.path())]);
        assert_eq!(code(&out), 4, "{}", stderr(&out));
    }
}

#[test]
fn rca_without_records_for_the_zone_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &[]);
    let model = dir.path().join("model.json");
    fit(&corpus, &model);
    let out = rca(&[
        "rca",
        "--input",
        s(&corpus),
        "--model",
        s(&model),
        "--date",
        "2018-04-25",
        "--zone",
        "LATAM",
        "--output-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    let out = rca(&[
        "rca",
        "--input",
        s(&corpus),
        "--model",
        s(&model),
        "--date",
        "2019-01-01",
        "--zone",
        "EMEA",
        "--output-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}

#[test]
fn rca_inside_the_training_window_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &[]);
    let model = dir.path().join("model.json");
    fit(&corpus, &model);
    let out = rca(&[
        "rca",
        "--input",
        s(&corpus),
        "--model",
        s(&model),
        "--date",
        "2018-04-10",
        "--zone",
        "EMEA",
        "--output-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn fit_snapshot_matches_library_warm_up() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &[]);
    let model_path = dir.path().join("model.json");
    fit(&corpus, &model_path);
    let loaded = TanModel::read_snapshot(fs::File::open(&model_path).unwrap()).unwrap();

    let records = ingest::read_csv_file(&corpus).unwrap().records;
    let batches = batches_by_day(&records, &TanConfig::default()).unwrap();
    let expected = pipeline::warm_up(TanConfig::default(), &batches, 14).unwrap();
    assert_eq!(loaded, expected);
    assert_eq!(loaded.horizon(), Some(batches[13].date));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &[]);
    let config = dir.path().join("run.conf");
    fs::write(&config, "# more warm-up than there is data\nwarm-up-days = 100\n").unwrap();
    let model = dir.path().join("m.json");
    let out = rca(&["fit", "--config", s(&config), "--input", s(&corpus), "--output", s(&model)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let out =
        rca(&["fit", "--config", s(&config), "--warm-up-days", "20", "--input", s(&corpus), "--output", s(&model)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    fs::write(&config, "not_a_setting = 1\n").unwrap();
    let out = rca(&["fit", "--config", s(&config), "--input", s(&corpus), "--output", s(&model)]);
    assert_eq!(code(&out), 2);
}

fn score_outputs(corpus: &Path, model: &Path, out_dir: &Path) -> Vec<(String, String)> {
    let out = rca(&["score", "--input", s(corpus), "--model", s(model), "--output-dir", s(out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut files: Vec<(String, String)> = fs::read_dir(out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn score_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &[]);
    let model = dir.path().join("model.json");
    fit(&corpus, &model);
    let a = score_outputs(&corpus, &model, &dir.path().join("a"));
    let b = score_outputs(&corpus, &model, &dir.path().join("b"));
    assert_eq!(a, b);
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "flags.csv",
            "scores_APJ_procedure.csv",
            "scores_APJ_project.csv",
            "scores_EMEA_procedure.csv",
            "scores_EMEA_project.csv"
        ]
    );
    // 26 scored days after a 14-day warm-up, plus the header.
    assert_eq!(a[1].1.lines().count(), 27);
}

#[test]
fn deleting_future_days_leaves_past_scores_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &[]);
    let model = dir.path().join("model.json");
    fit(&corpus, &model);

    let cutoff = chrono::NaiveDate::from_ymd_opt(2018, 4, 28).unwrap();
    let records = ingest::read_csv_file(&corpus).unwrap().records;
    let kept: Vec<_> = records.into_iter().filter(|r| r.date <= cutoff).collect();
    let truncated = dir.path().join("truncated.csv");
    ingest::write_csv(&kept, fs::File::create(&truncated).unwrap()).unwrap();

    let full = score_outputs(&corpus, &model, &dir.path().join("full"));
    let cut = score_outputs(&truncated, &model, &dir.path().join("cut"));
    for ((name, f), (_, c)) in full.iter().zip(&cut).filter(|((n, _), _)| n.starts_with("scores_")) {
        let c_lines: Vec<&str> = c.lines().collect();
        let f_lines: Vec<&str> = f.lines().take(c_lines.len()).collect();
        assert_eq!(c_lines.len(), 15, "{name}");
        assert_eq!(f_lines, c_lines, "{name}");
    }
}

#[test]
fn synth_is_deterministic_and_parses_cleanly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spike = ["--spike", "EMEA:P02:30:5"];
    let ca = small_corpus(a.path(), &spike);
    let cb = small_corpus(b.path(), &spike);
    assert_eq!(fs::read(&ca).unwrap(), fs::read(&cb).unwrap());
    assert_eq!(fs::read(a.path().join("manifest.json")).unwrap(), fs::read(b.path().join("manifest.json")).unwrap());
    let parsed = ingest::read_csv_file(&ca).unwrap();
    assert!(parsed.rejected.is_empty());
    assert!(!parsed.records.is_empty());
}

#[test]
fn manifest_lists_the_requested_injections() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(
        dir.path(),
        &["--spike", "EMEA:P02:30:5", "--swap", "APJ:P01.R1:P03.R2:31:1.0", "--new-keyword", "EMEA:P04.R1:32:0.5:Zyxw"],
    );
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let kinds: Vec<Value> =
        manifest.injections.iter().map(|i| serde_json::to_value(&i.spec).unwrap()["kind"].clone()).collect();
    assert_eq!(kinds, ["rate_spike", "message_swap", "new_keyword"]);
    assert_eq!(manifest.injections[2].token.as_deref(), Some("zyxw"));
}

#[test]
fn invalid_synth_settings_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [
        vec!["--days", "0"],
        vec!["--spike", "EMEA:P01:30"],
        vec!["--spike", "EMEA:NOPE:30:5"],
        vec!["--spike", "EMEA:P01:400:5"],
    ] {
        let mut args = vec!["synth", "--output-dir", s(dir.path())];
        args.extend(extra.iter().copied());
        let out = rca(&args);
        assert_eq!(code(&out), 2, "{extra:?}: {}", stderr(&out));
    }
}

fn rca_report(corpus: &Path, model: &Path, date: &str, zone: &str, out_dir: &Path, kind: &str) -> Value {
    let out = rca(&[
        "rca",
        "--input",
        s(corpus),
        "--model",
        s(model),
        "--date",
        date,
        "--zone",
        zone,
        "--output-dir",
        s(out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let path = out_dir.join(format!("rca_{zone}_{date}_{kind}.json"));
    assert!(out_dir.join(format!("rca_{zone}_{date}_{kind}.txt")).exists());
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn rca_names_the_spiked_project() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &["--spike", "EMEA:P02:30:10"]);
    let model = dir.path().join("model.json");
    fit(&corpus, &model);
    // Day 30 of a run starting 2018-04-01.
    let report = rca_report(&corpus, &model, "2018-04-30", "EMEA", dir.path(), "project");
    assert_eq!(report["ranked_items"][0]["label"], "P02");
    assert!(report["deficiency"].as_f64().unwrap() < 0.0);
}

#[test]
fn rca_reports_an_injected_keyword_as_novel() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path(), &["--new-keyword", "APJ:P03.R1:30:1.0:Qwvx"]);
    let model = dir.path().join("model.json");
    fit(&corpus, &model);
    let report = rca_report(&corpus, &model, "2018-04-30", "APJ", dir.path(), "procedure");
    let novel: Vec<&str> =
        report["novel_tokens"].as_array().unwrap().iter().map(|pair| pair[0].as_str().unwrap()).collect();
    assert!(novel.contains(&"qwvx"), "{novel:?}");
}
