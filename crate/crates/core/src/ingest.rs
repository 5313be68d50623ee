//! Log CSV parsing, tokenization and vocabulary construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::bernoulli_nb::Vocabulary;
use crate::error::{Error, Result};

/// Class label for records whose procedure is missing.
pub const NONE_PROCEDURE: &str = "(none)";

/// Serialized form of a missing string field.
const MISSING_MARKER: &str = "NaN";

pub const COLUMNS: [&str; 7] =
    ["row_id", "date", "region", "project_name", "procedure_name", "error_detail", "err_cnt"];

pub const DEFAULT_MIN_DOC_FREQUENCY: u64 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub row_id: u64,
    pub date: NaiveDate,
    pub region: String,
    pub project_name: String,
    pub procedure_name: Option<String>,
    pub error_detail: Option<String>,
    /// Always ≥ 1.
    pub err_cnt: u64,
}

impl LogRecord {
    /// Procedure class label, with [`NONE_PROCEDURE`] standing in for a missing name.
    pub fn procedure_label(&self) -> &str {
        self.procedure_name.as_deref().unwrap_or(NONE_PROCEDURE)
    }

    pub fn message(&self) -> &str {
        self.error_detail.as_deref().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the input, header included.
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub records: Vec<LogRecord>,
    pub rejected: Vec<RejectedRow>,
}

fn optional_field(raw: &str) -> Option<String> {
    if raw.is_empty() || raw == MISSING_MARKER {
        None
    } else {
        Some(raw.to_string())
    }
}

/// Parses the log CSV. Column order is free; every column in [`COLUMNS`] is required.
pub fn parse_csv<R: Read>(input: R) -> Result<ParsedLog> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let mut position = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        position.entry(h.trim().to_string()).or_insert(i);
    }
    let mut idx = [0usize; COLUMNS.len()];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = *position.get(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let [i_row, i_date, i_region, i_project, i_procedure, i_detail, i_count] = idx;

    let mut out = ParsedLog::default();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let reject = |reason: String| RejectedRow { row: line, reason };
        if row.len() != headers.len() {
            out.rejected.push(reject(format!("expected {} fields, found {}", headers.len(), row.len())));
            continue;
        }
        let row_id = match row[i_row].trim().parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                out.rejected.push(reject(format!("invalid row_id `{}`", &row[i_row])));
                continue;
            }
        };
        let date = match NaiveDate::parse_from_str(row[i_date].trim(), "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                out.rejected.push(reject(format!("invalid date `{}`", &row[i_date])));
                continue;
            }
        };
        let err_cnt = match row[i_count].trim().parse::<i64>() {
            Ok(v) if v >= 1 => v as u64,
            Ok(v) => {
                out.rejected.push(reject(format!("err_cnt must be positive, found {v}")));
                continue;
            }
            Err(_) => {
                out.rejected.push(reject(format!("invalid err_cnt `{}`", &row[i_count])));
                continue;
            }
        };
        if row[i_region].is_empty() {
            out.rejected.push(reject("empty region".to_string()));
            continue;
        }
        if row[i_project].is_empty() {
            out.rejected.push(reject("empty project_name".to_string()));
            continue;
        }
        out.records.push(LogRecord {
            row_id,
            date,
            region: row[i_region].to_string(),
            project_name: row[i_project].to_string(),
            procedure_name: optional_field(&row[i_procedure]),
            error_detail: optional_field(&row[i_detail]),
            err_cnt,
        });
    }
    Ok(out)
}

pub fn read_csv_file(path: &Path) -> Result<ParsedLog> {
    parse_csv(File::open(path)?)
}

/// Writes records with the canonical column order. Missing fields become `NaN`.
pub fn write_csv<W: Write>(records: &[LogRecord], output: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.row_id.to_string().as_str(),
            &r.date.format("%Y-%m-%d").to_string(),
            &r.region,
            &r.project_name,
            r.procedure_name.as_deref().unwrap_or(MISSING_MARKER),
            r.error_detail.as_deref().unwrap_or(MISSING_MARKER),
            &r.err_cnt.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejected<W: Write>(rows: &[RejectedRow], output: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(["row", "reason"])?;
    for r in rows {
        w.write_record([r.row.to_string().as_str(), &r.reason])?;
    }
    w.flush()?;
    Ok(())
}

/// Small English function-word list for the optional stop filter.
pub const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "has", "in", "is", "it", "of", "on", "or", "that",
    "the", "this", "to", "was", "were", "with",
];

/// Lowercased alphanumeric tokens of length ≥ 2, deduplicated.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2)
        .collect()
}

/// [`tokenize`] followed by removal of `stop_words`.
pub fn tokenize_filtered(text: &str, stop_words: &BTreeSet<String>) -> BTreeSet<String> {
    let mut tokens = tokenize(text);
    tokens.retain(|t| !stop_words.contains(t));
    tokens
}

pub fn default_stop_words() -> BTreeSet<String> {
    DEFAULT_STOP_WORDS.iter().map(|w| w.to_string()).collect()
}

/// Words whose weighted document frequency reaches `min_doc_frequency`, in lexicographic order.
pub fn build_vocabulary_weighted<'a, I>(documents: I, min_doc_frequency: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = (&'a BTreeSet<String>, u64)>,
{
    if min_doc_frequency == 0 {
        return Err(Error::domain("min_doc_frequency must be at least 1"));
    }
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for (doc, weight) in documents {
        for w in doc {
            *df.entry(w.as_str()).or_insert(0) += weight;
        }
    }
    Vocabulary::new(df.into_iter().filter(|(_, n)| *n >= min_doc_frequency).map(|(w, _)| w.to_string()).collect())
}

pub fn build_vocabulary<'a, I>(documents: I, min_doc_frequency: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a BTreeSet<String>>,
{
    build_vocabulary_weighted(documents.into_iter().map(|d| (d, 1)), min_doc_frequency)
}
