//! Log-space special functions and divergences.
//!
//! Everything downstream works in natural-log space; conversion to
//! probabilities happens only when rendering reports.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `log_gamma` shifts upward with the recurrence before
/// applying the asymptotic series.
const ASYMPTOTIC_CUTOFF: f64 = 15.0;

/// `B_{2n} / (2n (2n - 1))` for n = 1..=8.
const STIRLING_SERIES: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Tolerance on the sum of a [`ProbabilityVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Natural log of the gamma function for positive real arguments.
///
/// Uses the Stirling asymptotic series with eight Bernoulli terms for
/// `x >= 15` and the recurrence `ln Γ(x) = ln Γ(x + n) - ln(x (x+1) ... (x+n-1))`
/// below that. Relative error is below `1e-13` for `x >= 0.5` away from the
/// roots at 1 and 2, which are returned exactly.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!("log_gamma requires a positive finite argument, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the product below small and well conditioned.
        return log_gamma_unchecked(x + 1.0) - x.ln();
    }
    if x >= ASYMPTOTIC_CUTOFF {
        return stirling_series(x);
    }
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < ASYMPTOTIC_CUTOFF {
        product *= shifted;
        shifted += 1.0;
    }
    stirling_series(shifted) - product.ln()
}

fn stirling_series(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv_sq = inv * inv;
    let mut correction = 0.0;
    let mut power = inv;
    for coeff in STIRLING_SERIES {
        correction += coeff * power;
        power *= inv_sq;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + correction
}

/// Stirling's approximation `n ln n - n + ½ ln(2πn)` to `ln n!`.
///
/// Always underestimates: the gap to `ln Γ(n + 1)` lies in
/// `(1/(12n + 1), 1/(12n))` for `n >= 1`.
pub fn stirling_log_factorial(n: f64) -> Result<f64> {
    if !n.is_finite() || n <= 0.0 {
        return Err(Error::domain(format!("stirling_log_factorial requires n > 0, got {n}")));
    }
    Ok(n * n.ln() - n + 0.5 * (2.0 * PI * n).ln())
}

/// `x ln x` with the limit convention `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("probability vector must be non-empty"));
        }
        if let Some(bad) = entries.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(Error::domain(format!("probability entry {bad} outside [0, 1]")));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(entries))
    }

    /// Normalizes non-negative weights (e.g. counts) onto the simplex.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("weights must have a positive total"));
        }
        Ok(Self(weights.iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}

/// `D_KL(q || p) = Σ q_i ln(q_i / p_i)` in nats.
///
/// Entries with `q_i = 0` contribute nothing; `q_i > 0` with `p_i = 0`
/// yields [`Error::InfiniteDivergence`].
pub fn kl_divergence(q: &ProbabilityVector, p: &ProbabilityVector) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
    }
    let mut total = 0.0;
    for (index, (&qi, &pi)) in q.as_slice().iter().zip(p.as_slice()).enumerate() {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::InfiniteDivergence { index });
        }
        total += qi * (qi / pi).ln();
    }
    // Rounding can leave a tiny negative residue when q == p.
    Ok(total.max(0.0))
}

/// Overflow-safe `ln Σ exp(v_i)`.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return Err(Error::domain("log_sum_exp of an empty vector"));
    }
    if max.is_infinite() {
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}
