//! Dirichlet-Multinomial posterior predictive and its separable impacts.
//!
//! Model: `p ~ Dir(α)`, `k | p ~ Mult(p, k)`. After observing training
//! counts the posterior concentration is `α'_i = α_i + Σ counts_i`, and the
//! predictive probability of a new count vector `(k_1..k_d)` with total `k` is
//!
//! ```text
//! Γ(k+1)/Π Γ(k_i+1) · Γ(α')/Π Γ(α'_i) · Π Γ(k_i+α'_i)/Γ(k+α')
//! ```
//!
//! Expanding around the mode `k_i = k α'_i / α'` gives a quadratic form that
//! is diagonal in the observed frequencies, so the log-likelihood deficit
//! splits into per-category impacts
//! `I_i = -½ · α'/(α'+k) · k · (q_i - p_i)² / p_i` with `p_i = α'_i / α'`.
//!
//! The raw functions operate on aligned slices and accept real-valued counts
//! (continuous relaxation through the gamma function). The labeled wrappers
//! align a [`DirichletPosterior`] with a [`CountVector`] by category label,
//! extending the posterior with `prior_scale` for categories it has not seen.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{log_gamma_unchecked, stirling_log_factorial, xlogx, ProbabilityVector};

/// Default prior mass per category.
pub const DEFAULT_PRIOR_SCALE: f64 = 1.0;

/// Per-category event counts for one observation unit (e.g. one zone-day).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    categories: Vec<String>,
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(categories: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if categories.len() != counts.len() {
            return Err(Error::DimensionMismatch { expected: categories.len(), found: counts.len() });
        }
        ensure_unique(&categories)?;
        let total = counts.iter().sum();
        Ok(Self { categories, counts, total })
    }

    /// Builds from `(label, count)` pairs, summing repeated labels in first-seen order.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut categories: Vec<String> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (label, count) in pairs {
            let label = label.into();
            match index.get(&label) {
                Some(&i) => counts[i] += count,
                None => {
                    index.insert(label.clone(), categories.len());
                    categories.push(label);
                    counts.push(count);
                }
            }
        }
        let total = counts.iter().sum();
        Self { categories, counts, total }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<u64> {
        self.categories.iter().position(|c| c == label).map(|i| self.counts[i])
    }

    /// Observed frequencies `q_i = k_i / k`; `None` when the total is zero.
    pub fn frequencies(&self) -> Option<ProbabilityVector> {
        let weights: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        ProbabilityVector::from_weights(&weights).ok()
    }
}

/// Posterior concentration `α'` over labeled categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletPosterior {
    categories: Vec<String>,
    alpha: Vec<f64>,
    alpha_total: f64,
    /// Concentration assigned to categories first seen at scoring time.
    prior_scale: f64,
}

impl DirichletPosterior {
    pub fn new(categories: Vec<String>, alpha: Vec<f64>, prior_scale: f64) -> Result<Self> {
        if categories.len() != alpha.len() {
            return Err(Error::DimensionMismatch { expected: categories.len(), found: alpha.len() });
        }
        ensure_unique(&categories)?;
        validate_alpha(&alpha)?;
        validate_prior_scale(prior_scale)?;
        let alpha_total = alpha.iter().sum();
        Ok(Self { categories, alpha, alpha_total, prior_scale })
    }

    /// `α_i = prior_scale` for every category.
    pub fn uniform(categories: Vec<String>, prior_scale: f64) -> Result<Self> {
        let alpha = vec![prior_scale; categories.len()];
        Self::new(categories, alpha, prior_scale)
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_total(&self) -> f64 {
        self.alpha_total
    }

    pub fn prior_scale(&self) -> f64 {
        self.prior_scale
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha_of(&self, label: &str) -> Option<f64> {
        self.categories.iter().position(|c| c == label).map(|i| self.alpha[i])
    }

    /// Mode frequencies `p_i = α'_i / α'` (also the posterior mean).
    pub fn mode_frequencies(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::from_weights(&self.alpha)
    }

    /// Log posterior-mean probability of a single draw of `label`, extending
    /// with `prior_scale` when the label is unseen.
    pub fn log_predictive_single(&self, label: &str) -> f64 {
        match self.alpha_of(label) {
            Some(a) => a.ln() - self.alpha_total.ln(),
            None => self.prior_scale.ln() - (self.alpha_total + self.prior_scale).ln(),
        }
    }

    /// Adds unseen labels with concentration `prior_scale`.
    pub fn extended_with<'a, I>(&self, labels: I) -> Self
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut out = self.clone();
        let known: HashSet<&String> = self.categories.iter().collect();
        for label in labels {
            if !known.contains(label) && !out.categories.contains(label) {
                out.categories.push(label.clone());
                out.alpha.push(self.prior_scale);
                out.alpha_total += self.prior_scale;
            }
        }
        out
    }

    /// Conjugate update `α'_i += k_i`. Unseen categories enter at `prior_scale`.
    pub fn update(&self, counts: &CountVector) -> Self {
        let mut out = self.extended_with(counts.categories());
        let index: HashMap<&str, usize> = out.categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut alpha = out.alpha.clone();
        for (label, &k) in counts.categories().iter().zip(counts.counts()) {
            alpha[index[label.as_str()]] += k as f64;
        }
        out.alpha_total = alpha.iter().sum();
        out.alpha = alpha;
        out
    }

    /// Aligns this posterior with a count vector over the union of categories.
    /// Posterior categories keep their order; unseen count categories follow.
    pub fn align(&self, counts: &CountVector) -> Aligned {
        let extended = self.extended_with(counts.categories());
        let index: HashMap<&str, usize> =
            extended.categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut aligned_counts = vec![0.0; extended.len()];
        for (label, &k) in counts.categories().iter().zip(counts.counts()) {
            aligned_counts[index[label.as_str()]] += k as f64;
        }
        Aligned { categories: extended.categories, alpha: extended.alpha, counts: aligned_counts }
    }
}

/// Posterior concentrations and counts over a shared category order.
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub categories: Vec<String>,
    pub alpha: Vec<f64>,
    pub counts: Vec<f64>,
}

/// Per-category impacts `I(k_i) <= 0` and their sum, the deficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactVector {
    pub categories: Vec<String>,
    pub impacts: Vec<f64>,
    pub deficiency: f64,
    /// Exact log predictive evaluated at the (real-valued) mode.
    pub mode_log_likelihood: f64,
}

fn ensure_unique(categories: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(categories.len());
    for c in categories {
        if !seen.insert(c) {
            return Err(Error::domain(format!("duplicate category `{c}`")));
        }
    }
    Ok(())
}

fn validate_alpha(alpha: &[f64]) -> Result<()> {
    if let Some(a) = alpha.iter().find(|a| !a.is_finite() || **a <= 0.0) {
        return Err(Error::domain(format!("concentration {a} must be positive and finite")));
    }
    Ok(())
}

fn validate_prior_scale(prior_scale: f64) -> Result<()> {
    if !prior_scale.is_finite() || prior_scale <= 0.0 {
        return Err(Error::domain(format!("prior scale {prior_scale} must be positive")));
    }
    Ok(())
}

fn validate_counts(alpha: &[f64], counts: &[f64]) -> Result<f64> {
    if alpha.len() != counts.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), found: counts.len() });
    }
    if alpha.is_empty() {
        return Err(Error::domain("empty category set"));
    }
    validate_alpha(alpha)?;
    if let Some(k) = counts.iter().find(|k| !k.is_finite() || **k < 0.0) {
        return Err(Error::domain(format!("count {k} must be non-negative")));
    }
    Ok(counts.iter().sum())
}

/// `α'_i = α_i + counts_i`.
pub fn update_raw(alpha: &[f64], counts: &[f64]) -> Result<Vec<f64>> {
    validate_counts(alpha, counts)?;
    Ok(alpha.iter().zip(counts).map(|(a, k)| a + k).collect())
}

/// Exact log predictive probability of `counts` (real-valued counts allowed).
pub fn exact_log_predictive_raw(alpha: &[f64], counts: &[f64]) -> Result<f64> {
    let k = validate_counts(alpha, counts)?;
    let alpha_total: f64 = alpha.iter().sum();
    // Terms are grouped per category so large log-gamma values cancel early.
    let mut per_category = 0.0;
    for (&a, &c) in alpha.iter().zip(counts) {
        per_category += (log_gamma_unchecked(c + a) - log_gamma_unchecked(a)) - log_gamma_unchecked(c + 1.0);
    }
    let shared =
        log_gamma_unchecked(k + 1.0) + (log_gamma_unchecked(alpha_total) - log_gamma_unchecked(k + alpha_total));
    Ok(per_category + shared)
}

/// Leading-order entropy form of the log predictive:
/// `-k Σ q ln q - α' Σ p ln p + (k+α') Σ r ln r` with `r_i = (k_i+α'_i)/(k+α')`.
///
/// Drops the `½ ln(2πn)` corrections, so it vanishes whenever counts are
/// proportional to `α'`. Its stationary point on `Σ k_i = k` is exactly
/// [`mode_raw`].
pub fn leading_order_log_predictive_raw(alpha: &[f64], counts: &[f64]) -> Result<f64> {
    let k = validate_counts(alpha, counts)?;
    if k <= 0.0 {
        return Err(Error::domain("leading-order form requires a positive total"));
    }
    let alpha_total: f64 = alpha.iter().sum();
    let observed: f64 = counts.iter().map(|c| xlogx(c / k)).sum();
    let prior: f64 = alpha.iter().map(|a| xlogx(a / alpha_total)).sum();
    let pooled: f64 = alpha.iter().zip(counts).map(|(a, c)| xlogx((c + a) / (k + alpha_total))).sum();
    Ok(-k * observed - alpha_total * prior + (k + alpha_total) * pooled)
}

/// Stirling approximation of [`exact_log_predictive_raw`]: every factorial
/// `ln z!` is replaced by `z ln z - z + ½ ln(2πz)`.
///
/// The `z ln z - z` parts reproduce [`leading_order_log_predictive_raw`]; the
/// `½ ln(2πz)` parts carry the remaining `O(log k)` mass. Requires every
/// count to be positive.
pub fn stirling_log_predictive_raw(alpha: &[f64], counts: &[f64]) -> Result<f64> {
    let k = validate_counts(alpha, counts)?;
    if let Some(i) = counts.iter().position(|&c| c <= 0.0) {
        return Err(Error::domain(format!(
            "Stirling form needs positive counts; category {i} is zero (use the exact form)"
        )));
    }
    let alpha_total: f64 = alpha.iter().sum();
    // ln Γ(z) = ln z! - ln z
    let lgamma = |z: f64| -> Result<f64> { Ok(stirling_log_factorial(z)? - z.ln()) };
    let mut per_category = 0.0;
    for (&a, &c) in alpha.iter().zip(counts) {
        per_category += (lgamma(c + a)? - lgamma(a)?) - stirling_log_factorial(c)?;
    }
    let shared = stirling_log_factorial(k)? + (lgamma(alpha_total)? - lgamma(k + alpha_total)?);
    Ok(per_category + shared)
}

/// Mode of the predictive posterior for total `k`: `k_i = k α'_i / α'`.
pub fn mode_raw(alpha: &[f64], total: f64) -> Result<Vec<f64>> {
    validate_alpha(alpha)?;
    if alpha.is_empty() {
        return Err(Error::domain("empty category set"));
    }
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::domain(format!("mode requires a positive total, got {total}")));
    }
    let alpha_total: f64 = alpha.iter().sum();
    Ok(alpha.iter().map(|a| total * a / alpha_total).collect())
}

/// Shrinkage `α'/(α'+k)` and the per-category quadratic deficit terms.
fn quadratic_terms(alpha: &[f64], counts: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = validate_counts(alpha, counts)?;
    if k <= 0.0 {
        return Err(Error::domain("impacts require a positive total count"));
    }
    let alpha_total: f64 = alpha.iter().sum();
    let shrinkage = alpha_total / (alpha_total + k);
    let terms = alpha
        .iter()
        .zip(counts)
        .map(|(a, c)| {
            let p = a / alpha_total;
            let q = c / k;
            -0.5 * shrinkage * k * (q - p) * (q - p) / p
        })
        .collect();
    Ok((k, terms))
}

/// Laplace (second-order) approximation around the mode.
pub fn laplace_log_predictive_raw(alpha: &[f64], counts: &[f64]) -> Result<f64> {
    let (k, terms) = quadratic_terms(alpha, counts)?;
    let at_mode = exact_log_predictive_raw(alpha, &mode_raw(alpha, k)?)?;
    Ok(at_mode + terms.iter().sum::<f64>())
}

/// Per-category impacts, their sum and the exact log predictive at the mode.
pub fn impacts_raw(alpha: &[f64], counts: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let (k, terms) = quadratic_terms(alpha, counts)?;
    let at_mode = exact_log_predictive_raw(alpha, &mode_raw(alpha, k)?)?;
    let deficiency = terms.iter().sum();
    Ok((terms, deficiency, at_mode))
}

pub fn update(posterior: &DirichletPosterior, counts: &CountVector) -> DirichletPosterior {
    posterior.update(counts)
}

pub fn exact_log_predictive(posterior: &DirichletPosterior, counts: &CountVector) -> Result<f64> {
    let a = posterior.align(counts);
    exact_log_predictive_raw(&a.alpha, &a.counts)
}

pub fn stirling_log_predictive(posterior: &DirichletPosterior, counts: &CountVector) -> Result<f64> {
    let a = posterior.align(counts);
    stirling_log_predictive_raw(&a.alpha, &a.counts)
}

pub fn mode(posterior: &DirichletPosterior, total: u64) -> Result<Vec<f64>> {
    mode_raw(posterior.alpha(), total as f64)
}

pub fn laplace_log_predictive(posterior: &DirichletPosterior, counts: &CountVector) -> Result<f64> {
    let a = posterior.align(counts);
    laplace_log_predictive_raw(&a.alpha, &a.counts)
}

pub fn impacts(posterior: &DirichletPosterior, counts: &CountVector) -> Result<ImpactVector> {
    let a = posterior.align(counts);
    let (impacts, deficiency, mode_log_likelihood) = impacts_raw(&a.alpha, &a.counts)?;
    Ok(ImpactVector { categories: a.categories, impacts, deficiency, mode_log_likelihood })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn post(alpha: &[f64]) -> DirichletPosterior {
        DirichletPosterior::new(labels(alpha.len()), alpha.to_vec(), 1.0).unwrap()
    }

    fn counts(k: &[u64]) -> CountVector {
        CountVector::new(labels(k.len()), k.to_vec()).unwrap()
    }

    /// ln(n!) by direct summation, independent of `log_gamma`.
    fn ln_fact(n: u64) -> f64 {
        (2..=n).map(|j| (j as f64).ln()).sum()
    }

    #[test]
    fn update_examples() {
        assert_eq!(update(&post(&[1.0, 1.0]), &counts(&[0, 0])).alpha(), &[1.0, 1.0]);
        let p = update(&post(&[1.0, 1.0]), &counts(&[4, 6]));
        assert_eq!(p.alpha(), &[5.0, 7.0]);
        assert_eq!(p.alpha_total(), 12.0);
        let p = update(&update(&post(&[1.0, 1.0, 1.0]), &counts(&[1, 2, 3])), &counts(&[2, 0, 5]));
        assert_eq!(p.alpha(), &[4.0, 3.0, 9.0]);
    }

    #[test]
    fn update_rejects_negative_counts() {
        assert!(update_raw(&[1.0, 1.0], &[-1.0, 2.0]).is_err());
        assert!(update_raw(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn update_extends_unseen_categories() {
        let p = post(&[2.0, 3.0]);
        let c = CountVector::from_pairs([("c1", 4u64), ("new", 2)]);
        let u = p.update(&c);
        assert_eq!(u.categories(), &["c0", "c1", "new"]);
        assert_eq!(u.alpha(), &[2.0, 7.0, 3.0]);
    }

    #[test]
    fn exact_beta_binomial_enumeration() {
        // Uniform prior on p makes the number of successes uniform on {0,1,2}.
        let third = (1.0f64 / 3.0).ln();
        assert!((exact_log_predictive(&post(&[1.0, 1.0]), &counts(&[2, 0])).unwrap() - third).abs() < 1e-12);
        assert!((exact_log_predictive(&post(&[1.0, 1.0]), &counts(&[1, 1])).unwrap() - third).abs() < 1e-12);
        for (a, k) in [(0.3, 5u64), (17.0, 0), (1e5, 1234)] {
            assert!(exact_log_predictive(&post(&[a]), &counts(&[k])).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn exact_matches_factorial_oracle_at_integers() {
        // Integer α' lets every Γ be written as a factorial.
        let alpha = [3u64, 5, 2];
        let k = [4u64, 0, 7];
        let at: u64 = alpha.iter().sum();
        let kt: u64 = k.iter().sum();
        let mut oracle = ln_fact(kt) + ln_fact(at - 1) - ln_fact(kt + at - 1);
        for (a, c) in alpha.iter().zip(k) {
            oracle += ln_fact(c + a - 1) - ln_fact(a - 1) - ln_fact(c);
        }
        let alpha_f: Vec<f64> = alpha.iter().map(|&a| a as f64).collect();
        let k_f: Vec<f64> = k.iter().map(|&c| c as f64).collect();
        assert!((exact_log_predictive_raw(&alpha_f, &k_f).unwrap() - oracle).abs() < 1e-11);
    }

    #[test]
    fn exact_dimension_mismatch() {
        assert!(matches!(exact_log_predictive_raw(&[1.0, 2.0], &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn stirling_agreement() {
        let rel = |a: &[f64], c: &[f64]| {
            let e = exact_log_predictive_raw(a, c).unwrap();
            let s = stirling_log_predictive_raw(a, c).unwrap();
            ((s - e) / e).abs()
        };
        assert!(rel(&[500.0, 1500.0, 3000.0], &[50.0, 150.0, 300.0]) <= 0.01);
        assert!(rel(&[50.0, 150.0, 300.0], &[5.0, 15.0, 30.0]) <= 0.05);
        assert_eq!(stirling_log_predictive_raw(&[7.0], &[13.0]).unwrap(), 0.0);
        assert!(stirling_log_predictive_raw(&[1.0, 1.0], &[0.0, 3.0]).is_err());
    }

    #[test]
    fn leading_order_vanishes_at_proportional_counts() {
        let v = leading_order_log_predictive_raw(&[500.0, 1500.0, 3000.0], &[50.0, 150.0, 300.0]).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn mode_examples() {
        assert_eq!(mode(&post(&[4.0, 4.0, 4.0]), 99).unwrap(), vec![33.0, 33.0, 33.0]);
        let m = mode(&post(&[100.0, 300.0, 600.0]), 100).unwrap();
        for (got, want) in m.iter().zip([10.0, 30.0, 60.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((m.iter().sum::<f64>() - 100.0).abs() < 1e-12);
        assert!(mode(&post(&[1.0]), 0).is_err());
    }

    #[test]
    fn mode_maximizes_leading_order_form() {
        let alpha = [100.0, 300.0, 600.0];
        let m = mode_raw(&alpha, 100.0).unwrap();
        let at_mode = leading_order_log_predictive_raw(&alpha, &m).unwrap();
        for eps in [0.1, 1.0] {
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    let mut c = m.clone();
                    c[i] += eps;
                    c[j] -= eps;
                    assert!(leading_order_log_predictive_raw(&alpha, &c).unwrap() <= at_mode);
                }
            }
        }
    }

    #[test]
    fn mode_perturbations_of_exact_form() {
        // Oracle values (scipy gammaln): moving 0.1 toward the largest category
        // raises the exact log predictive because the exact maximizer sits
        // about half a unit away from k α'_i / α'. Unit steps never improve.
        let alpha = [100.0, 300.0, 600.0];
        let m = mode_raw(&alpha, 100.0).unwrap();
        let at_mode = exact_log_predictive_raw(&alpha, &m).unwrap();
        let delta = |i: usize, j: usize, eps: f64| {
            let mut c = m.clone();
            c[i] += eps;
            c[j] -= eps;
            exact_log_predictive_raw(&alpha, &c).unwrap() - at_mode
        };
        assert!((delta(2, 0, 0.1) - 0.003958500833505241).abs() < 1e-9);
        assert!((delta(0, 2, 1.0) + 0.09379387928584038).abs() < 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(delta(i, j, 1.0) < 0.0);
                }
            }
        }
    }

    #[test]
    fn laplace_examples() {
        let alpha = [100.0, 300.0, 600.0];
        let at_mode = exact_log_predictive_raw(&alpha, &[10.0, 30.0, 60.0]).unwrap();
        let lap = laplace_log_predictive_raw(&alpha, &[10.0, 30.0, 60.0]).unwrap();
        assert!((lap - at_mode).abs() < 1e-12);
        let exact = exact_log_predictive(&post(&alpha), &counts(&[10, 30, 60])).unwrap();
        assert!((laplace_log_predictive(&post(&alpha), &counts(&[10, 30, 60])).unwrap() - exact).abs() <= 0.05);

        // Far from the mode (category 0 doubled) the quadratic form is only a
        // rough guide; oracle values from scipy gammaln.
        let alpha = [1000.0, 3000.0, 6000.0];
        let c = [20.0, 25.0, 55.0];
        let exact = exact_log_predictive_raw(&alpha, &c).unwrap();
        let lap = laplace_log_predictive_raw(&alpha, &c).unwrap();
        let at_mode = exact_log_predictive_raw(&alpha, &[10.0, 30.0, 60.0]).unwrap();
        assert!((exact + 9.13182943315769).abs() < 1e-9);
        assert!((lap + 10.025277692321193).abs() < 1e-9);
        assert!((at_mode + 4.455970761628123).abs() < 1e-9);
    }

    #[test]
    fn impact_examples() {
        // Identity case.
        let ip = impacts(&post(&[100.0, 300.0, 600.0]), &counts(&[10, 30, 60])).unwrap();
        assert!(ip.impacts.iter().all(|i| i.abs() < 1e-12));
        assert!(ip.deficiency.abs() < 1e-12);

        // Huge α' makes the shrinkage factor 1.
        let big = [1e15, 3e15, 6e15];
        let (imp, def, _) = impacts_raw(&big, &[20.0, 25.0, 55.0]).unwrap();
        for (got, want) in imp.iter().zip([-5.0, -0.4166666666666667, -0.20833333333333334]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert!((def - imp.iter().sum::<f64>()).abs() < 1e-12);

        // α' = 900, k = 100: shrinkage 0.9.
        let (scaled, _, _) = impacts_raw(&[90.0, 270.0, 540.0], &[20.0, 25.0, 55.0]).unwrap();
        for (s, i) in scaled.iter().zip(&imp) {
            assert!((s - 0.9 * i).abs() < 1e-9);
        }
    }

    #[test]
    fn impacts_include_unseen_categories() {
        let p = DirichletPosterior::new(labels(2), vec![500.0, 500.0], 1.0).unwrap();
        let c = CountVector::from_pairs([("c0", 50u64), ("c1", 40), ("fresh", 10)]);
        let ip = impacts(&p, &c).unwrap();
        assert_eq!(ip.categories.last().unwrap(), "fresh");
        let worst = ip.impacts.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(worst, *ip.impacts.last().unwrap());
    }

    #[test]
    fn multinomial_kl_connection_single_draw() {
        use crate::numerics::kl_divergence;
        let p: [f64; 3] = [0.2, 0.3, 0.5];
        let k = [2100u64, 2950, 4950];
        let n: u64 = k.iter().sum();
        let mut ln_pmf = ln_fact(n);
        for (ki, pi) in k.iter().zip(p) {
            ln_pmf += *ki as f64 * pi.ln() - ln_fact(*ki);
        }
        let q = ProbabilityVector::from_weights(&k.map(|x| x as f64)).unwrap();
        let kl = kl_divergence(&q, &ProbabilityVector::new(p.to_vec()).unwrap()).unwrap();
        let nf = n as f64;
        assert!((ln_pmf / nf + kl).abs() <= 5.0 * 3.0 * nf.ln() / nf);
    }

    fn posterior_and_counts() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..7).prop_flat_map(|d| {
            (prop::collection::vec(1.0f64..1e4, d), prop::collection::vec(0u32..500, d))
                .prop_map(|(a, c)| (a, c.into_iter().map(f64::from).collect::<Vec<_>>()))
        })
    }

    proptest! {
        #[test]
        fn impacts_non_positive_and_sum_to_deficiency((alpha, c) in posterior_and_counts()) {
            prop_assume!(c.iter().sum::<f64>() > 0.0);
            let (imp, def, _) = impacts_raw(&alpha, &c).unwrap();
            prop_assert!(imp.iter().all(|&i| i <= 0.0));
            prop_assert!((def - imp.iter().sum::<f64>()).abs() <= 1e-9);
        }

        #[test]
        fn larger_deviation_never_raises_impact(
            share in 0.05f64..0.5,
            base in 0.0f64..0.3,
            extra in 0.0f64..0.2,
        ) {
            // Category 0 deviates from its mode share by `base` then `base + extra`;
            // the remainder keeps the mode's relative split.
            let alpha = [share * 1e4, (1.0 - share) * 0.4 * 1e4, (1.0 - share) * 0.6 * 1e4];
            let k = 1000.0;
            let impact0 = |dev: f64| {
                let q0 = (share * (1.0 + dev)).min(0.999);
                let rest = 1.0 - q0;
                let c = [q0 * k, rest * 0.4 * k, rest * 0.6 * k];
                impacts_raw(&alpha, &c).unwrap().0[0]
            };
            prop_assert!(impact0(base + extra) <= impact0(base) + 1e-12);
        }
    }
}
