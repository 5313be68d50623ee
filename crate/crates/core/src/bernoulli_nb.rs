//! Bernoulli Naive Bayes over binarized bag-of-words messages.
//!
//! Each word-given-class probability carries a Beta(1, 1) prior, so the
//! posterior mean is `p_{w|c} = (n_{w,c} + 1) / (n_c + 2)`, strictly inside
//! (0, 1). Class log-priors are injected by the caller.
//!
//! For a message with actual class `c` and most likely class `c*`, the log
//! posterior gap splits exactly into a class term and one term per
//! vocabulary word:
//!
//! ```text
//! ln L(c|w) - ln L(c*|w) = ln(p_c / p_c*)
//!     + Σ_w [present: ln(p_{w|c} / p_{w|c*}); absent: ln((1-p_{w|c}) / (1-p_{w|c*}))]
//! ```

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

/// Ordered, duplicate-free word list with index lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::domain(format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Self { words, index })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Binarizes a token stream against this vocabulary.
    pub fn encode<'a, I>(&self, tokens: I) -> BowVector
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut present = vec![false; self.len()];
        let mut oov = BTreeSet::new();
        for t in tokens {
            match self.position(t) {
                Some(i) => present[i] = true,
                None => {
                    oov.insert(t.to_string());
                }
            }
        }
        BowVector::from_parts(present, oov.into_iter().collect())
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(words: Vec<String>) -> Result<Self> {
        Self::new(words)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

/// Presence indicators of every vocabulary word in one message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowVector {
    present: Vec<bool>,
    present_indices: Vec<usize>,
    /// Tokens with no vocabulary entry; not scored, kept for reporting.
    pub out_of_vocabulary: Vec<String>,
}

impl BowVector {
    pub fn from_parts(present: Vec<bool>, out_of_vocabulary: Vec<String>) -> Self {
        let present_indices = present.iter().enumerate().filter(|(_, p)| **p).map(|(i, _)| i).collect();
        Self { present, present_indices, out_of_vocabulary }
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn present_indices(&self) -> &[usize] {
        &self.present_indices
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }
}

/// Fitted word tables shared between models that differ only in class prior.
#[derive(Debug, PartialEq)]
struct WordTables {
    doc_count: Vec<u64>,
    /// `[class][word]`
    word_doc_count: Vec<Vec<u64>>,
    /// `[class][word]`
    word_given_class: Vec<Vec<f64>>,
    log_p: Vec<Vec<f64>>,
    log_not_p: Vec<Vec<f64>>,
    /// Score of the all-absent message, per class: `Σ_w ln(1 - p_{w|c})`.
    absent_baseline: Vec<f64>,
}

impl WordTables {
    fn from_counts(doc_count: Vec<u64>, word_doc_count: Vec<Vec<u64>>) -> Self {
        let word_given_class: Vec<Vec<f64>> = doc_count
            .iter()
            .zip(&word_doc_count)
            .map(|(&n_c, row)| row.iter().map(|&n_wc| (n_wc as f64 + 1.0) / (n_c as f64 + 2.0)).collect())
            .collect();
        let log_p: Vec<Vec<f64>> = word_given_class.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
        let log_not_p: Vec<Vec<f64>> =
            word_given_class.iter().map(|r| r.iter().map(|p| (-p).ln_1p()).collect()).collect();
        let absent_baseline = log_not_p.iter().map(|r| r.iter().sum()).collect();
        Self { doc_count, word_doc_count, word_given_class, log_p, log_not_p, absent_baseline }
    }
}

/// Bernoulli Naive Bayes classifier with Beta(1, 1) smoothing.
#[derive(Debug, Clone)]
pub struct BnbModel {
    classes: Vec<String>,
    class_log_prior: Vec<f64>,
    vocabulary: Arc<Vocabulary>,
    tables: Arc<WordTables>,
}

/// Decomposition of one message's log posterior gap to the mode class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordImpactReport {
    pub actual_class: String,
    pub mode_class: String,
    /// `ln L(c|w) - ln L(c*|w)`, never positive.
    pub gap: f64,
    /// `ln(p_c / p_c*)`.
    pub prior_term: f64,
    /// One entry per vocabulary word, in vocabulary order.
    pub word_impacts: Vec<f64>,
}

fn normalize_log_prior(log_prior: &[f64]) -> Result<Vec<f64>> {
    if log_prior.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::domain("class log-prior must not contain NaN or +inf"));
    }
    let z = log_sum_exp(log_prior)?;
    if !z.is_finite() {
        return Err(Error::domain("class log-prior has no finite mass"));
    }
    Ok(log_prior.iter().map(|v| v - z).collect())
}

impl BnbModel {
    /// Fits from labeled documents, one observation each.
    pub fn fit(
        documents: &[(BowVector, String)],
        vocabulary: Vocabulary,
        classes: Vec<String>,
        class_log_prior: &[f64],
    ) -> Result<Self> {
        let weighted: Vec<(&BowVector, &str, u64)> = documents.iter().map(|(bow, c)| (bow, c.as_str(), 1u64)).collect();
        Self::fit_weighted(&weighted, vocabulary, classes, class_log_prior)
    }

    /// Fits from documents carrying a multiplicity (identical repeated messages).
    pub fn fit_weighted(
        documents: &[(&BowVector, &str, u64)],
        vocabulary: Vocabulary,
        classes: Vec<String>,
        class_log_prior: &[f64],
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::domain("BNB requires at least one class"));
        }
        let class_index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        if class_index.len() != classes.len() {
            return Err(Error::domain("duplicate class labels"));
        }
        let mut doc_count = vec![0u64; classes.len()];
        let mut word_doc_count = vec![vec![0u64; vocabulary.len()]; classes.len()];
        for (bow, class, weight) in documents {
            if bow.len() != vocabulary.len() {
                return Err(Error::DimensionMismatch { expected: vocabulary.len(), found: bow.len() });
            }
            let c = *class_index.get(class).ok_or_else(|| Error::UnknownClass(class.to_string()))?;
            doc_count[c] += weight;
            for &w in bow.present_indices() {
                word_doc_count[c][w] += weight;
            }
        }
        Self::from_counts(classes, vocabulary, doc_count, word_doc_count, class_log_prior)
    }

    /// Builds directly from sufficient statistics `n_c` and `n_{w,c}` (`[class][word]`).
    pub fn from_counts(
        classes: Vec<String>,
        vocabulary: Vocabulary,
        doc_count: Vec<u64>,
        word_doc_count: Vec<Vec<u64>>,
        class_log_prior: &[f64],
    ) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::domain("BNB requires at least one class"));
        }
        if class_log_prior.len() != classes.len() {
            return Err(Error::DimensionMismatch { expected: classes.len(), found: class_log_prior.len() });
        }
        if doc_count.len() != classes.len() || word_doc_count.len() != classes.len() {
            return Err(Error::DimensionMismatch { expected: classes.len(), found: doc_count.len() });
        }
        for (row, &n_c) in word_doc_count.iter().zip(&doc_count) {
            if row.len() != vocabulary.len() {
                return Err(Error::DimensionMismatch { expected: vocabulary.len(), found: row.len() });
            }
            if row.iter().any(|&n| n > n_c) {
                return Err(Error::domain("word document count exceeds class document count"));
            }
        }
        Ok(Self {
            class_log_prior: normalize_log_prior(class_log_prior)?,
            classes,
            vocabulary: Arc::new(vocabulary),
            tables: Arc::new(WordTables::from_counts(doc_count, word_doc_count)),
        })
    }

    /// Same word tables, uniform class prior.
    pub fn fit_uniform(
        documents: &[(BowVector, String)],
        vocabulary: Vocabulary,
        classes: Vec<String>,
    ) -> Result<Self> {
        let prior = vec![0.0; classes.len()];
        Self::fit(documents, vocabulary, classes, &prior)
    }

    /// Shares the fitted word tables under a different class prior.
    pub fn with_class_log_prior(&self, class_log_prior: &[f64]) -> Result<Self> {
        if class_log_prior.len() != self.classes.len() {
            return Err(Error::DimensionMismatch { expected: self.classes.len(), found: class_log_prior.len() });
        }
        Ok(Self {
            classes: self.classes.clone(),
            class_log_prior: normalize_log_prior(class_log_prior)?,
            vocabulary: Arc::clone(&self.vocabulary),
            tables: Arc::clone(&self.tables),
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    pub fn class_log_prior(&self) -> &[f64] {
        &self.class_log_prior
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn doc_count(&self) -> &[u64] {
        &self.tables.doc_count
    }

    pub fn word_doc_count(&self, class: usize, word: usize) -> u64 {
        self.tables.word_doc_count[class][word]
    }

    /// `p_{w|c}` for class index `class` and word index `word`.
    pub fn word_given_class(&self, class: usize, word: usize) -> f64 {
        self.tables.word_given_class[class][word]
    }

    pub fn encode<'a, I>(&self, tokens: I) -> BowVector
    where
        I: IntoIterator<Item = &'a str>,
    {
        self.vocabulary.encode(tokens)
    }

    fn check_message(&self, message: &BowVector) -> Result<()> {
        if message.len() != self.vocabulary.len() {
            return Err(Error::DimensionMismatch { expected: self.vocabulary.len(), found: message.len() });
        }
        Ok(())
    }

    /// Unnormalized `ln p_c + Σ_w ln p(w | c)` for every class.
    pub fn joint_log_scores(&self, message: &BowVector) -> Result<Vec<f64>> {
        self.check_message(message)?;
        let t = &self.tables;
        Ok((0..self.classes.len())
            .map(|c| {
                let words: f64 = message.present_indices().iter().map(|&w| t.log_p[c][w] - t.log_not_p[c][w]).sum();
                self.class_log_prior[c] + t.absent_baseline[c] + words
            })
            .collect())
    }

    /// `ln p(words | c)` without the class prior.
    pub fn log_likelihood_given_class(&self, message: &BowVector, class: usize) -> Result<f64> {
        self.check_message(message)?;
        let t = &self.tables;
        let words: f64 = message.present_indices().iter().map(|&w| t.log_p[class][w] - t.log_not_p[class][w]).sum();
        Ok(t.absent_baseline[class] + words)
    }

    /// Normalized log posterior over classes.
    pub fn class_log_scores(&self, message: &BowVector) -> Result<Vec<f64>> {
        let joint = self.joint_log_scores(message)?;
        let z = log_sum_exp(&joint)?;
        Ok(joint.into_iter().map(|s| s - z).collect())
    }

    /// Index of the most likely class; ties resolve to the lowest index.
    pub fn mode_class(&self, message: &BowVector) -> Result<usize> {
        let joint = self.joint_log_scores(message)?;
        Ok(argmax(&joint))
    }

    /// Log posterior gap of `actual_class` to the mode class, split into the
    /// class-prior term and one impact per vocabulary word.
    pub fn gap_and_impacts(&self, message: &BowVector, actual_class: &str) -> Result<WordImpactReport> {
        let actual = self.class_index(actual_class).ok_or_else(|| Error::UnknownClass(actual_class.to_string()))?;
        let joint = self.joint_log_scores(message)?;
        let mode = argmax(&joint);
        let t = &self.tables;
        let word_impacts = message
            .present()
            .iter()
            .enumerate()
            .map(|(w, &present)| {
                if present {
                    t.log_p[actual][w] - t.log_p[mode][w]
                } else {
                    t.log_not_p[actual][w] - t.log_not_p[mode][w]
                }
            })
            .collect();
        Ok(WordImpactReport {
            actual_class: actual_class.to_string(),
            mode_class: self.classes[mode].clone(),
            gap: joint[actual] - joint[mode],
            prior_term: self.class_log_prior[actual] - self.class_log_prior[mode],
            word_impacts,
        })
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn fit(
    documents: &[(BowVector, String)],
    vocabulary: Vocabulary,
    classes: Vec<String>,
    class_log_prior: &[f64],
) -> Result<BnbModel> {
    BnbModel::fit(documents, vocabulary, classes, class_log_prior)
}

pub fn class_log_scores(model: &BnbModel, message: &BowVector) -> Result<Vec<f64>> {
    model.class_log_scores(message)
}

pub fn gap_and_impacts(model: &BnbModel, message: &BowVector, actual_class: &str) -> Result<WordImpactReport> {
    model.gap_and_impacts(message, actual_class)
}
