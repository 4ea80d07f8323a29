//! Lagged cross-correlation between two equal-length series.
//!
//! `coefficient(t)` is the Pearson correlation of `x[0..n-t]` against
//! `y[t..n]`: the y series lags x by `t` periods, so a positive coefficient
//! at lag t means movements in x are echoed in y t periods later. Lag 0 is
//! plain Pearson.

use serde::Serialize;

use super::correlation::pearson;
use super::StatsError;

/// Fewest overlapping pairs a lag needs to be reported.
pub const MIN_OVERLAP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagCoefficient {
    pub lag: usize,
    pub coefficient: f64,
    pub n_overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCorrelationResult {
    /// One entry per computable lag, ascending. Lags with fewer than
    /// [`MIN_OVERLAP`] overlapping pairs or zero variance are omitted.
    pub coefficients: Vec<LagCoefficient>,
    /// The lag with the largest |coefficient|; smaller lag wins ties.
    pub best: LagCoefficient,
}

pub fn cross_correlation(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
) -> Result<CrossCorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::NotComputable(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let mut coefficients = Vec::new();
    for lag in 0..=max_lag {
        if n < lag + MIN_OVERLAP {
            break;
        }
        let overlap = n - lag;
        match pearson(&x[..overlap], &y[lag..]) {
            Ok(r) => coefficients.push(LagCoefficient {
                lag,
                coefficient: r.coefficient,
                n_overlap: overlap,
            }),
            Err(_) => continue,
        }
    }
    let best = coefficients
        .iter()
        .copied()
        .max_by(|a, b| {
            a.coefficient
                .abs()
                .partial_cmp(&b.coefficient.abs())
                .unwrap()
                .then(b.lag.cmp(&a.lag))
        })
        .ok_or_else(|| StatsError::NotComputable("no lag had enough overlap".into()))?;
    Ok(CrossCorrelationResult { coefficients, best })
}
