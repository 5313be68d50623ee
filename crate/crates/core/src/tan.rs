//! Per-zone tree-augmented model: projects given zone, procedures given
//! (project, zone), and error words given (procedure, zone).
//!
//! The model stores integer sufficient statistics only. Posteriors and the
//! word classifier are materialized per zone as a [`ZoneSnapshot`], so a
//! fitted state can be serialized, reloaded and compared exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::bernoulli_nb::{BnbModel, Vocabulary};
use crate::dirichlet::{self, CountVector, DirichletPosterior, DEFAULT_PRIOR_SCALE};
use crate::error::{Error, Result};
use crate::ingest::{self, LogRecord, DEFAULT_MIN_DOC_FREQUENCY};

const SNAPSHOT_FORMAT: &str = "rca-tan-model";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TanConfig {
    /// Dirichlet concentration given to every category before any counts.
    pub prior_scale: f64,
    /// Weighted document frequency a word needs to enter a zone's vocabulary.
    pub min_doc_frequency: u64,
    pub stop_words: bool,
}

impl Default for TanConfig {
    fn default() -> Self {
        Self { prior_scale: DEFAULT_PRIOR_SCALE, min_doc_frequency: DEFAULT_MIN_DOC_FREQUENCY, stop_words: false }
    }
}

impl TanConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.prior_scale.is_finite() || self.prior_scale <= 0.0 {
            return Err(Error::Config(format!("prior scale must be positive, got {}", self.prior_scale)));
        }
        if self.min_doc_frequency == 0 {
            return Err(Error::Config("min_doc_frequency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn tokenize(&self, text: &str) -> BTreeSet<String> {
        if self.stop_words {
            ingest::tokenize_filtered(text, &ingest::default_stop_words())
        } else {
            ingest::tokenize(text)
        }
    }
}

/// One aggregated log row, tokenized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayRecord {
    pub project: String,
    pub procedure: String,
    pub tokens: BTreeSet<String>,
    pub err_cnt: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneDay {
    /// Totals equal the sum of `err_cnt` over `records`.
    pub project_counts: CountVector,
    pub records: Vec<DayRecord>,
}

impl ZoneDay {
    pub fn new(records: Vec<DayRecord>) -> Self {
        let project_counts = CountVector::from_pairs(records.iter().map(|r| (r.project.clone(), r.err_cnt)));
        Self { project_counts, records }
    }

    pub fn total(&self) -> u64 {
        self.project_counts.total()
    }
}

/// All records of one calendar day, grouped by zone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayBatch {
    pub date: NaiveDate,
    pub zones: BTreeMap<String, ZoneDay>,
}

impl DayBatch {
    pub fn empty(date: NaiveDate) -> Self {
        Self { date, zones: BTreeMap::new() }
    }

    /// Groups `records` of a single date. Records of other dates are an error.
    pub fn from_records(date: NaiveDate, records: &[LogRecord], config: &TanConfig) -> Result<Self> {
        let mut grouped: BTreeMap<String, Vec<DayRecord>> = BTreeMap::new();
        for r in records {
            if r.date != date {
                return Err(Error::Format(format!("record {} dated {} in batch for {date}", r.row_id, r.date)));
            }
            grouped.entry(r.region.clone()).or_default().push(DayRecord {
                project: r.project_name.clone(),
                procedure: r.procedure_label().to_string(),
                tokens: config.tokenize(r.message()),
                err_cnt: r.err_cnt,
            });
        }
        Ok(Self { date, zones: grouped.into_iter().map(|(z, rs)| (z, ZoneDay::new(rs))).collect() })
    }

    /// Concatenates the records of several batches under `date`.
    pub fn merge<'a, I>(date: NaiveDate, batches: I) -> Self
    where
        I: IntoIterator<Item = &'a DayBatch>,
    {
        let mut grouped: BTreeMap<String, Vec<DayRecord>> = BTreeMap::new();
        for b in batches {
            for (zone, day) in &b.zones {
                grouped.entry(zone.clone()).or_default().extend(day.records.iter().cloned());
            }
        }
        Self { date, zones: grouped.into_iter().map(|(z, rs)| (z, ZoneDay::new(rs))).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }
}

/// Splits records into one batch per distinct date, in date order.
pub fn batches_by_day(records: &[LogRecord], config: &TanConfig) -> Result<Vec<DayBatch>> {
    let mut by_date: BTreeMap<NaiveDate, Vec<LogRecord>> = BTreeMap::new();
    for r in records {
        by_date.entry(r.date).or_default().push(r.clone());
    }
    by_date.into_iter().map(|(d, rs)| DayBatch::from_records(d, &rs, config)).collect()
}

/// Integer sufficient statistics of one zone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneState {
    pub project_counts: BTreeMap<String, u64>,
    /// project → procedure → count
    pub procedure_counts: BTreeMap<String, BTreeMap<String, u64>>,
    /// procedure → `n_c`
    pub class_doc_counts: BTreeMap<String, u64>,
    /// procedure → word → `n_{w,c}`
    pub word_doc_counts: BTreeMap<String, BTreeMap<String, u64>>,
    /// word → weighted document frequency over all procedures
    pub word_df: BTreeMap<String, u64>,
}

impl ZoneState {
    fn absorb(&mut self, day: &ZoneDay) {
        for r in &day.records {
            let n = r.err_cnt;
            *self.project_counts.entry(r.project.clone()).or_insert(0) += n;
            *self.procedure_counts.entry(r.project.clone()).or_default().entry(r.procedure.clone()).or_insert(0) += n;
            *self.class_doc_counts.entry(r.procedure.clone()).or_insert(0) += n;
            let words = self.word_doc_counts.entry(r.procedure.clone()).or_default();
            for t in &r.tokens {
                *words.entry(t.clone()).or_insert(0) += n;
                *self.word_df.entry(t.clone()).or_insert(0) += n;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TanModel {
    pub config: TanConfig,
    zones: BTreeMap<String, ZoneState>,
    /// Last date folded into the model.
    horizon: Option<NaiveDate>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotDocument {
    format: String,
    version: u32,
    model: TanModel,
}

#[derive(Deserialize)]
struct SnapshotHeader {
    format: Option<String>,
    version: Option<u32>,
}

/// Per-record log-likelihood split along the network's factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordLogLikelihood {
    pub total: f64,
    pub project: f64,
    pub procedure: f64,
    pub words: f64,
}

/// Daily scores of one zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneDayScores {
    /// Exact log predictive of the day's project counts divided by their total.
    pub project: f64,
    /// `err_cnt`-weighted mean log posterior of each record's actual procedure.
    pub procedure: f64,
}

impl TanModel {
    pub fn new(config: TanConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, zones: BTreeMap::new(), horizon: None })
    }

    pub fn horizon(&self) -> Option<NaiveDate> {
        self.horizon
    }

    pub fn zones(&self) -> impl Iterator<Item = &str> {
        self.zones.keys().map(String::as_str)
    }

    pub fn zone_state(&self, zone: &str) -> Option<&ZoneState> {
        self.zones.get(zone)
    }

    /// Folds one day's counts into every conditional and advances the horizon.
    pub fn fit_increment(&mut self, day: &DayBatch) -> Result<()> {
        if let Some(h) = self.horizon {
            if day.date <= h {
                return Err(Error::OutOfOrder { date: day.date, horizon: h });
            }
        }
        for (zone, zd) in &day.zones {
            self.zones.entry(zone.clone()).or_default().absorb(zd);
        }
        self.horizon = Some(day.date);
        Ok(())
    }

    /// Materializes the posteriors of `zone`. Labels first seen in `day`
    /// enter at the prior scale.
    pub fn zone_snapshot(&self, zone: &str, day: Option<&ZoneDay>) -> Result<ZoneSnapshot> {
        let state = self.zones.get(zone).ok_or_else(|| Error::UnknownZone(zone.to_string()))?;
        ZoneSnapshot::build(state, &self.config, day)
    }

    /// Log-likelihood of one record with its three factors.
    pub fn record_log_likelihood(&self, zone: &str, record: &DayRecord) -> Result<RecordLogLikelihood> {
        let day = ZoneDay::new(vec![record.clone()]);
        self.zone_snapshot(zone, Some(&day))?.record_log_likelihood(record)
    }

    /// Scores every zone of `day` that the model knows; other zones are absent.
    pub fn day_scores(&self, day: &DayBatch) -> Result<BTreeMap<String, ZoneDayScores>> {
        let mut out = BTreeMap::new();
        for (zone, zd) in &day.zones {
            if !self.zones.contains_key(zone) || zd.records.is_empty() {
                continue;
            }
            let snap = self.zone_snapshot(zone, Some(zd))?;
            out.insert(zone.clone(), snap.day_scores(zd)?);
        }
        Ok(out)
    }

    pub fn write_snapshot<W: Write>(&self, output: W) -> Result<()> {
        let doc = SnapshotDocument { format: SNAPSHOT_FORMAT.into(), version: SNAPSHOT_VERSION, model: self.clone() };
        serde_json::to_writer_pretty(output, &doc)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let header: SnapshotHeader =
            serde_json::from_str(&text).map_err(|e| Error::Snapshot(format!("not a model snapshot: {e}")))?;
        if header.format.as_deref() != Some(SNAPSHOT_FORMAT) {
            return Err(Error::Snapshot(format!("unexpected format {:?}", header.format)));
        }
        if header.version != Some(SNAPSHOT_VERSION) {
            return Err(Error::Snapshot(format!(
                "unsupported version {:?}, expected {SNAPSHOT_VERSION}",
                header.version
            )));
        }
        let doc: SnapshotDocument =
            serde_json::from_str(&text).map_err(|e| Error::Snapshot(format!("malformed snapshot: {e}")))?;
        doc.model.config.validate().map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(doc.model)
    }
}

/// `model` with `day` folded in.
pub fn fit_increment(model: &TanModel, day: &DayBatch) -> Result<TanModel> {
    let mut next = model.clone();
    next.fit_increment(day)?;
    Ok(next)
}

pub fn record_log_likelihood(model: &TanModel, zone: &str, record: &DayRecord) -> Result<RecordLogLikelihood> {
    model.record_log_likelihood(zone, record)
}

pub fn day_scores(model: &TanModel, day: &DayBatch) -> Result<BTreeMap<String, ZoneDayScores>> {
    model.day_scores(day)
}

/// Materialized posteriors of one zone.
#[derive(Debug, Clone)]
pub struct ZoneSnapshot {
    project_posterior: DirichletPosterior,
    /// Procedure classes in BNB order.
    classes: Vec<String>,
    procedure_counts: BTreeMap<String, BTreeMap<String, u64>>,
    prior_scale: f64,
    /// Word tables under a uniform class prior.
    bnb: BnbModel,
}

impl ZoneSnapshot {
    fn build(state: &ZoneState, config: &TanConfig, day: Option<&ZoneDay>) -> Result<Self> {
        let mut projects: BTreeSet<&str> = state.project_counts.keys().map(String::as_str).collect();
        let mut classes: BTreeSet<&str> = state.class_doc_counts.keys().map(String::as_str).collect();
        if let Some(d) = day {
            for r in &d.records {
                projects.insert(&r.project);
                classes.insert(&r.procedure);
            }
        }
        let prior = config.prior_scale;
        let (project_labels, project_alpha): (Vec<String>, Vec<f64>) = projects
            .iter()
            .map(|p| (p.to_string(), prior + state.project_counts.get(*p).copied().unwrap_or(0) as f64))
            .unzip();
        let project_posterior = DirichletPosterior::new(project_labels, project_alpha, prior)?;

        let vocabulary = Vocabulary::new(
            state.word_df.iter().filter(|(_, n)| **n >= config.min_doc_frequency).map(|(w, _)| w.clone()).collect(),
        )?;
        let classes: Vec<String> = classes.into_iter().map(String::from).collect();
        let doc_count: Vec<u64> = classes.iter().map(|c| state.class_doc_counts.get(c).copied().unwrap_or(0)).collect();
        let empty = BTreeMap::new();
        let word_doc_count: Vec<Vec<u64>> = classes
            .iter()
            .map(|c| {
                let row = state.word_doc_counts.get(c).unwrap_or(&empty);
                vocabulary.words().iter().map(|w| row.get(w).copied().unwrap_or(0)).collect()
            })
            .collect();
        let uniform = vec![0.0; classes.len()];
        let bnb = BnbModel::from_counts(classes.clone(), vocabulary, doc_count, word_doc_count, &uniform)?;
        Ok(Self {
            project_posterior,
            classes,
            procedure_counts: state.procedure_counts.clone(),
            prior_scale: prior,
            bnb,
        })
    }

    pub fn project_posterior(&self) -> &DirichletPosterior {
        &self.project_posterior
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Procedure posterior of `project` over every procedure class of the zone.
    pub fn procedure_posterior(&self, project: &str) -> Result<DirichletPosterior> {
        let counts = self.procedure_counts.get(project);
        let alpha = self
            .classes
            .iter()
            .map(|c| self.prior_scale + counts.and_then(|m| m.get(c)).copied().unwrap_or(0) as f64)
            .collect();
        DirichletPosterior::new(self.classes.clone(), alpha, self.prior_scale)
    }

    /// Word classifier with class priors from `project`'s procedure posterior mean.
    pub fn bnb_for_project(&self, project: &str) -> Result<BnbModel> {
        let post = self.procedure_posterior(project)?;
        let total = post.alpha_total().ln();
        let log_prior: Vec<f64> = post.alpha().iter().map(|a| a.ln() - total).collect();
        self.bnb.with_class_log_prior(&log_prior)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        self.bnb.vocabulary()
    }

    pub fn record_log_likelihood(&self, record: &DayRecord) -> Result<RecordLogLikelihood> {
        let project = self.project_posterior.log_predictive_single(&record.project);
        let procedure = self.procedure_posterior(&record.project)?.log_predictive_single(&record.procedure);
        let class =
            self.bnb.class_index(&record.procedure).ok_or_else(|| Error::UnknownClass(record.procedure.clone()))?;
        let message = self.bnb.encode(record.tokens.iter().map(String::as_str));
        let words = self.bnb.log_likelihood_given_class(&message, class)?;
        Ok(RecordLogLikelihood { total: project + procedure + words, project, procedure, words })
    }

    pub fn day_scores(&self, day: &ZoneDay) -> Result<ZoneDayScores> {
        let k = day.total();
        if k == 0 {
            return Err(Error::domain("zone day has no records"));
        }
        let project = dirichlet::exact_log_predictive(&self.project_posterior, &day.project_counts)? / k as f64;

        let mut models: HashMap<&str, BnbModel> = HashMap::new();
        let mut weighted = 0.0;
        for r in &day.records {
            if !models.contains_key(r.project.as_str()) {
                models.insert(&r.project, self.bnb_for_project(&r.project)?);
            }
            let model = &models[r.project.as_str()];
            let class = model.class_index(&r.procedure).ok_or_else(|| Error::UnknownClass(r.procedure.clone()))?;
            let scores = model.class_log_scores(&model.encode(r.tokens.iter().map(String::as_str)))?;
            weighted += r.err_cnt as f64 * scores[class];
        }
        Ok(ZoneDayScores { project, procedure: weighted / k as f64 })
    }
}
