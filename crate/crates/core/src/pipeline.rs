//! Rolling day-by-day protocol: every day is scored with a model trained
//! strictly on earlier days, then folded into the model.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::detector::{flag_threshold, DailyScoreSeries, ScoreKind};
use crate::error::{Error, Result};
use crate::tan::{DayBatch, TanConfig, TanModel};

pub const DEFAULT_WARM_UP_DAYS: usize = 14;

/// Fits the first `warm_up_days` batches into a fresh model.
pub fn warm_up(config: TanConfig, batches: &[DayBatch], warm_up_days: usize) -> Result<TanModel> {
    if warm_up_days == 0 {
        return Err(Error::Config("warm-up needs at least one day".into()));
    }
    if batches.len() < warm_up_days {
        return Err(Error::InsufficientData(format!("{} day(s) of data, warm-up needs {warm_up_days}", batches.len())));
    }
    let mut model = TanModel::new(config)?;
    for b in &batches[..warm_up_days] {
        model.fit_increment(b)?;
    }
    Ok(model)
}

/// Folds every batch dated on or before `until` that follows the model horizon.
pub fn train_through(model: &mut TanModel, batches: &[DayBatch], until: NaiveDate) -> Result<()> {
    for b in batches.iter().filter(|b| b.date <= until) {
        if model.horizon().is_none_or(|h| b.date > h) {
            model.fit_increment(b)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RollingRun {
    /// Model after folding in every scored day.
    pub model: TanModel,
    /// One series per (zone, kind), ordered by zone then kind.
    pub series: Vec<DailyScoreSeries>,
    /// Each scored date with the horizon of the model that scored it.
    pub horizons: Vec<(NaiveDate, NaiveDate)>,
}

/// Scores every batch after the model horizon, folding each in afterwards.
pub fn roll(mut model: TanModel, batches: &[DayBatch]) -> Result<RollingRun> {
    let mut points: BTreeMap<(String, ScoreKind), Vec<(NaiveDate, f64)>> = BTreeMap::new();
    let mut horizons = Vec::new();
    for b in batches {
        let Some(h) = model.horizon() else {
            model.fit_increment(b)?;
            continue;
        };
        if b.date <= h {
            continue;
        }
        for (zone, s) in model.day_scores(b)? {
            points.entry((zone.clone(), ScoreKind::Project)).or_default().push((b.date, s.project));
            points.entry((zone, ScoreKind::Procedure)).or_default().push((b.date, s.procedure));
        }
        horizons.push((b.date, h));
        model.fit_increment(b)?;
    }
    let series =
        points.into_iter().map(|((zone, kind), p)| DailyScoreSeries::new(zone, kind, p)).collect::<Result<_>>()?;
    Ok(RollingRun { model, series, horizons })
}

/// Warm-up followed by rolling scoring of the remaining days.
pub fn run(config: TanConfig, batches: &[DayBatch], warm_up_days: usize) -> Result<RollingRun> {
    let model = warm_up(config, batches, warm_up_days)?;
    roll(model, &batches[warm_up_days..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    pub zone: String,
    pub kind: ScoreKind,
    pub date: NaiveDate,
    pub score: f64,
    pub threshold: f64,
}

/// Series too short to be judged, by (zone, kind).
pub type SkippedSeries = Vec<(String, ScoreKind)>;

/// Flags of every series long enough to be judged, plus the skipped series.
pub fn flag_all(series: &[DailyScoreSeries], sensitivity: f64) -> Result<(Vec<Flag>, SkippedSeries)> {
    let mut flags = Vec::new();
    let mut skipped = Vec::new();
    for s in series {
        match flag_threshold(s, sensitivity) {
            Ok(Some(t)) => flags.extend(s.points().iter().filter(|(_, v)| *v < t).map(|(d, v)| Flag {
                zone: s.zone.clone(),
                kind: s.kind,
                date: *d,
                score: *v,
                threshold: t,
            })),
            Ok(None) => {}
            Err(Error::InsufficientData(_)) => skipped.push((s.zone.clone(), s.kind)),
            Err(e) => return Err(e),
        }
    }
    Ok((flags, skipped))
}
