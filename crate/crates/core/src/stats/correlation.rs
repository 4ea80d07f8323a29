//! Spearman and Pearson correlation with two-sided p-values.
//!
//! Spearman is the Pearson correlation of average-tie ranks. For small
//! samples (n <= 8) the p-value comes from the exact permutation
//! distribution; above that, from the usual t transform
//! `t = rho * sqrt((n-2) / (1 - rho^2))` with n-2 degrees of freedom.

use itertools::Itertools;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;
use crate::ranks::{average_ranks, RankOrder};

/// Largest sample size that still uses the exact permutation p-value.
pub const EXACT_PERMUTATION_MAX_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Spearman,
    Pearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    ExactPermutation,
    TApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub coefficient: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: CorrelationMethod,
    pub p_method: PValueMethod,
}

/// Drops every index where either side is absent, keeping pairs aligned.
pub fn pairwise_complete(x: &[Option<f64>], y: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    x.iter()
        .zip(y)
        .filter_map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => Some((*a, *b)),
            _ => None,
        })
        .unzip()
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::NotComputable(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(StatsError::NotComputable(format!(
            "need at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NotComputable("non-finite value".into()));
    }
    Ok(())
}

/// Plain product-moment correlation of two equal-length samples.
fn pearson_coefficient(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::NotComputable("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn t_approximation_p(coefficient: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - coefficient * coefficient;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = coefficient * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// Two-sided exact permutation p-value: the share of permutations of `y`
/// whose |coefficient| reaches the observed one. Holds the x side fixed;
/// means and variances are permutation-invariant, so only the cross sum
/// varies per permutation.
fn exact_permutation_p(x: &[f64], y: &[f64], observed: f64) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let scale = (sxx * syy).sqrt();
    let threshold = observed.abs() - 1e-12;

    let mut hits: u64 = 0;
    let mut total: u64 = 0;
    for perm in y.iter().permutations(y.len()) {
        let sxy: f64 = x
            .iter()
            .zip(&perm)
            .map(|(a, b)| (a - mx) * (**b - my))
            .sum();
        let coefficient = sxy / scale;
        if coefficient.abs() >= threshold {
            hits += 1;
        }
        total += 1;
    }
    hits as f64 / total as f64
}

/// Spearman rank correlation with pairwise-deleted absent values handled by
/// the caller via [`pairwise_complete`].
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    check_inputs(x, y)?;
    let rx = average_ranks(x, RankOrder::Ascending);
    let ry = average_ranks(y, RankOrder::Ascending);
    let coefficient = pearson_coefficient(&rx, &ry)?;
    let n = x.len();
    let (p_value, p_method) = if n <= EXACT_PERMUTATION_MAX_N {
        (
            exact_permutation_p(&rx, &ry, coefficient),
            PValueMethod::ExactPermutation,
        )
    } else {
        (t_approximation_p(coefficient, n), PValueMethod::TApproximation)
    };
    Ok(CorrelationResult {
        coefficient,
        p_value,
        n,
        method: CorrelationMethod::Spearman,
        p_method,
    })
}

/// Product-moment correlation with the same guards and p-value scheme as
/// [`spearman`].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    check_inputs(x, y)?;
    let coefficient = pearson_coefficient(x, y)?;
    let n = x.len();
    let (p_value, p_method) = if n <= EXACT_PERMUTATION_MAX_N {
        (
            exact_permutation_p(x, y, coefficient),
            PValueMethod::ExactPermutation,
        )
    } else {
        (t_approximation_p(coefficient, n), PValueMethod::TApproximation)
    };
    Ok(CorrelationResult {
        coefficient,
        p_value,
        n,
        method: CorrelationMethod::Pearson,
        p_method,
    })
}
