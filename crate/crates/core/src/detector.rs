//! Anomaly flagging on daily score series and impact-ranked explanations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{self, ImpactVector};
use crate::error::{Error, Result};
use crate::tan::{DayBatch, TanModel, ZoneDay};

pub const DEFAULT_SENSITIVITY: f64 = 3.0;
/// Normal-consistency factor for the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;
/// Threshold below the median, in nats, used when the MAD is zero.
pub const MAD_ZERO_MARGIN: f64 = 1.0;
pub const MIN_SERIES_LEN: usize = 14;
pub const DEFAULT_TOP_PROJECTS: usize = 5;
pub const DEFAULT_TOP_WORDS: usize = 5;
pub const DEFAULT_REFERENCE_DAYS: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Project,
    Procedure,
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::Project => "project",
            ScoreKind::Procedure => "procedure",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyScoreSeries {
    pub zone: String,
    pub kind: ScoreKind,
    points: Vec<(NaiveDate, f64)>,
}

impl DailyScoreSeries {
    pub fn new(zone: impl Into<String>, kind: ScoreKind, points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Format(format!("series dates not increasing at {}", w[1].0)));
            }
        }
        if let Some((d, s)) = points.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::Format(format!("non-finite score {s} on {d}")));
        }
        Ok(Self { zone: zone.into(), kind, points })
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn score_on(&self, date: NaiveDate) -> Option<f64> {
        self.points.binary_search_by_key(&date, |(d, _)| *d).ok().map(|i| self.points[i].1)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Lower threshold of the robust z-score rule; `None` when nothing can be flagged.
pub fn flag_threshold(series: &DailyScoreSeries, sensitivity: f64) -> Result<Option<f64>> {
    if sensitivity.is_nan() || sensitivity < 0.0 {
        return Err(Error::Config(format!("sensitivity must be non-negative, got {sensitivity}")));
    }
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::InsufficientData(format!(
            "series {}/{} has {} points, need {MIN_SERIES_LEN}",
            series.zone,
            series.kind,
            series.len()
        )));
    }
    if sensitivity.is_infinite() {
        return Ok(None);
    }
    let mut scores: Vec<f64> = series.points.iter().map(|(_, s)| *s).collect();
    let med = median(&mut scores);
    let mut deviations: Vec<f64> = scores.iter().map(|s| (s - med).abs()).collect();
    let mad = median(&mut deviations);
    Ok(Some(if mad > 0.0 { med - sensitivity * MAD_SCALE * mad } else { med - MAD_ZERO_MARGIN }))
}

/// Dates whose score falls below `median − sensitivity·1.4826·MAD`.
pub fn flag_anomalies(series: &DailyScoreSeries, sensitivity: f64) -> Result<Vec<NaiveDate>> {
    Ok(match flag_threshold(series, sensitivity)? {
        Some(t) => series.points.iter().filter(|(_, s)| *s < t).map(|(d, _)| *d).collect(),
        None => Vec::new(),
    })
}

/// Writes `date,zone,kind,score` rows.
pub fn write_series_csv<W: Write>(series: &[DailyScoreSeries], output: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(["date", "zone", "kind", "score"])?;
    for s in series {
        let kind = s.kind.to_string();
        for (d, score) in &s.points {
            w.write_record([d.to_string().as_str(), &s.zone, &kind, &score.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub label: String,
    /// Never positive.
    pub impact: f64,
    /// Fraction of the report's total negative mass.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRow {
    pub class: String,
    pub anomaly_day_hits: u64,
    pub reference_mean_hits: f64,
}

/// Per-class `err_cnt`-weighted count of messages containing a keyword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitCrossTab {
    pub keywords: Vec<String>,
    pub reference_days: usize,
    pub rows: Vec<HitRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcaReport {
    pub date: NaiveDate,
    pub zone: String,
    pub kind: ScoreKind,
    /// Total log-likelihood shortfall against the mode, never positive.
    pub deficiency: f64,
    /// Most negative impact first.
    pub ranked_items: Vec<RankedItem>,
    /// Class-prior part of the procedure deficiency, kept apart from the words.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_term: Option<f64>,
    /// Explaining keywords; procedure reports only.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub keyword_set: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crosstab: Option<HitCrossTab>,
    /// Tokens absent from the model vocabulary with their `err_cnt` weight.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub novel_tokens: Vec<(String, u64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

const NO_DEFICIENCY: &str = "no deficiency to explain";

impl RcaReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} RCA for zone {} on {}", self.kind, self.zone, self.date);
        let _ = writeln!(out, "deficiency: {:.6} nats", self.deficiency);
        if let Some(p) = self.prior_term {
            let _ = writeln!(out, "class prior term: {p:.6} nats");
        }
        if let Some(note) = &self.note {
            let _ = writeln!(out, "note: {note}");
        }
        if !self.ranked_items.is_empty() {
            let header = match self.kind {
                ScoreKind::Project => "project",
                ScoreKind::Procedure => "keyword",
            };
            let _ = writeln!(out, "{:<4} {:<24} {:>14} {:>8}", "rank", header, "impact", "share");
            for (i, item) in self.ranked_items.iter().enumerate() {
                let _ =
                    writeln!(out, "{:<4} {:<24} {:>14.6} {:>7.1}%", i + 1, item.label, item.impact, 100.0 * item.share);
            }
        }
        if !self.keyword_set.is_empty() {
            let _ = writeln!(out, "keyword set: {}", self.keyword_set.join(", "));
        }
        if !self.novel_tokens.is_empty() {
            let list: Vec<String> = self.novel_tokens.iter().map(|(t, n)| format!("{t} ({n})")).collect();
            let _ = writeln!(out, "tokens outside the vocabulary: {}", list.join(", "));
        }
        if let Some(tab) = &self.crosstab {
            let _ = writeln!(out, "keyword hits (reference: mean over {} days)", tab.reference_days);
            let _ = writeln!(out, "{:<24} {:>12} {:>14}", "class", "day hits", "reference mean");
            for row in &tab.rows {
                let _ =
                    writeln!(out, "{:<24} {:>12} {:>14.2}", row.class, row.anomaly_day_hits, row.reference_mean_hits);
            }
        }
        out
    }
}

fn zone_day<'a>(day: &'a DayBatch, zone: &str) -> Result<&'a ZoneDay> {
    match day.zones.get(zone) {
        Some(zd) if zd.total() > 0 => Ok(zd),
        _ => Err(Error::NoRecords { zone: zone.to_string(), date: day.date }),
    }
}

/// Ranks non-positive impacts ascending; shares are relative to `negative_mass`.
fn rank(labels: &[String], impacts: &[f64], negative_mass: f64, top_k: usize) -> Vec<RankedItem> {
    let mut order: Vec<usize> = (0..impacts.len()).filter(|&i| impacts[i] <= 0.0).collect();
    order.sort_by(|&a, &b| impacts[a].total_cmp(&impacts[b]).then_with(|| labels[a].cmp(&labels[b])));
    order
        .into_iter()
        .take(top_k)
        .map(|i| RankedItem {
            label: labels[i].clone(),
            impact: impacts[i],
            share: if negative_mass < 0.0 { impacts[i] / negative_mass } else { 0.0 },
        })
        .collect()
}

/// Per-project impacts of one zone-day against the model's project posterior.
pub fn project_impacts(model: &TanModel, day: &DayBatch, zone: &str) -> Result<ImpactVector> {
    let zd = zone_day(day, zone)?;
    let snap = model.zone_snapshot(zone, Some(zd))?;
    dirichlet::impacts(snap.project_posterior(), &zd.project_counts)
}

pub fn project_rca(model: &TanModel, day: &DayBatch, zone: &str, top_k: usize) -> Result<RcaReport> {
    let iv = project_impacts(model, day, zone)?;
    let ranked_items = rank(&iv.categories, &iv.impacts, iv.deficiency, top_k);
    Ok(RcaReport {
        date: day.date,
        zone: zone.to_string(),
        kind: ScoreKind::Project,
        deficiency: iv.deficiency,
        ranked_items,
        prior_term: None,
        keyword_set: Vec::new(),
        crosstab: None,
        novel_tokens: Vec::new(),
        note: (iv.deficiency == 0.0).then(|| NO_DEFICIENCY.to_string()),
    })
}

/// `err_cnt`-weighted daily averages of per-record word impacts.
#[derive(Debug, Clone, PartialEq)]
pub struct DayWordImpacts {
    pub words: Vec<String>,
    pub impacts: Vec<f64>,
    pub prior_term: f64,
    /// Weighted mean gap; equals `prior_term + Σ impacts`.
    pub deficiency: f64,
    pub novel_tokens: Vec<(String, u64)>,
}

pub fn procedure_impacts(model: &TanModel, day: &DayBatch, zone: &str) -> Result<DayWordImpacts> {
    let zd = zone_day(day, zone)?;
    let snap = model.zone_snapshot(zone, Some(zd))?;
    let words = snap.vocabulary().words().to_vec();
    let mut impacts = vec![0.0; words.len()];
    let mut prior_term = 0.0;
    let mut gap = 0.0;
    let mut novel: BTreeMap<String, u64> = BTreeMap::new();
    let mut models = BTreeMap::new();
    for r in &zd.records {
        if !models.contains_key(r.project.as_str()) {
            models.insert(r.project.as_str(), snap.bnb_for_project(&r.project)?);
        }
        let bnb = &models[r.project.as_str()];
        let message = bnb.encode(r.tokens.iter().map(String::as_str));
        let report = bnb.gap_and_impacts(&message, &r.procedure)?;
        let n = r.err_cnt as f64;
        for (acc, i) in impacts.iter_mut().zip(&report.word_impacts) {
            *acc += n * i;
        }
        prior_term += n * report.prior_term;
        gap += n * report.gap;
        for t in message.out_of_vocabulary {
            *novel.entry(t).or_insert(0) += r.err_cnt;
        }
    }
    let k = zd.total() as f64;
    impacts.iter_mut().for_each(|i| *i /= k);
    let mut novel_tokens: Vec<(String, u64)> = novel.into_iter().collect();
    novel_tokens.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(DayWordImpacts { words, impacts, prior_term: prior_term / k, deficiency: gap / k, novel_tokens })
}

/// Word-level explanation of a zone-day with a keyword-hit cross-tab over `reference`.
pub fn procedure_rca(
    model: &TanModel,
    day: &DayBatch,
    zone: &str,
    top_k_words: usize,
    reference: &[&DayBatch],
) -> Result<RcaReport> {
    let di = procedure_impacts(model, day, zone)?;
    let negative_mass: f64 = di.impacts.iter().filter(|i| **i < 0.0).sum::<f64>() + di.prior_term.min(0.0);
    let ranked_items: Vec<RankedItem> =
        rank(&di.words, &di.impacts, negative_mass, top_k_words).into_iter().filter(|item| item.impact < 0.0).collect();
    let keyword_set: Vec<String> = ranked_items.iter().map(|i| i.label.clone()).collect();
    let crosstab = if keyword_set.is_empty() {
        None
    } else {
        let s: BTreeSet<String> = keyword_set.iter().cloned().collect();
        let empty = ZoneDay::new(Vec::new());
        let reference_days: Vec<&ZoneDay> = reference.iter().map(|b| b.zones.get(zone).unwrap_or(&empty)).collect();
        Some(keyword_hits_crosstab(zone_day(day, zone)?, &reference_days, &s)?)
    };
    Ok(RcaReport {
        date: day.date,
        zone: zone.to_string(),
        kind: ScoreKind::Procedure,
        deficiency: di.deficiency,
        ranked_items,
        prior_term: Some(di.prior_term),
        keyword_set,
        crosstab,
        novel_tokens: di.novel_tokens,
        note: (di.deficiency == 0.0).then(|| NO_DEFICIENCY.to_string()),
    })
}

fn hits_by_class(day: &ZoneDay, keywords: &BTreeSet<String>, out: &mut BTreeMap<String, u64>) {
    for r in &day.records {
        let entry = out.entry(r.procedure.clone()).or_insert(0);
        if r.tokens.iter().any(|t| keywords.contains(t)) {
            *entry += r.err_cnt;
        }
    }
}

/// Hits on the anomaly day and the mean daily hits over `reference`, per class.
pub fn keyword_hits_crosstab(
    day: &ZoneDay,
    reference: &[&ZoneDay],
    keywords: &BTreeSet<String>,
) -> Result<HitCrossTab> {
    if keywords.is_empty() {
        return Err(Error::domain("keyword set is empty"));
    }
    let mut on_day = BTreeMap::new();
    hits_by_class(day, keywords, &mut on_day);
    let mut in_reference = BTreeMap::new();
    for d in reference {
        hits_by_class(d, keywords, &mut in_reference);
    }
    let classes: BTreeSet<&String> = on_day.keys().chain(in_reference.keys()).collect();
    let days = reference.len();
    let rows = classes
        .into_iter()
        .map(|c| HitRow {
            class: c.clone(),
            anomaly_day_hits: on_day.get(c).copied().unwrap_or(0),
            reference_mean_hits: if days == 0 {
                0.0
            } else {
                in_reference.get(c).copied().unwrap_or(0) as f64 / days as f64
            },
        })
        .collect();
    Ok(HitCrossTab { keywords: keywords.iter().cloned().collect(), reference_days: days, rows })
}
