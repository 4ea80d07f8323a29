//! Trend changepoint detection by two-piece linear fitting with a residual
//! bootstrap for the detection probability.
//!
//! The candidate is the interior index minimizing the total squared error
//! of two least-squares lines that share the breakpoint sample. The
//! probability is the fraction of residual-bootstrap replicates whose own
//! minimizer lands within one index of the candidate; with per-replicate
//! seeded substreams the result is identical regardless of worker count.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::StatsError;

/// Shortest series the detector accepts.
pub const MIN_SERIES_LEN: usize = 8;

/// Relative SSE improvement of the two-piece fit over a single line below
/// which the candidate is flagged low-confidence.
pub const LOW_CONFIDENCE_IMPROVEMENT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangepointResult {
    /// Index of the detected break, strictly interior to the series.
    pub candidate_index: usize,
    /// Bootstrap frequency of the minimizer landing within +/-1 of the
    /// candidate.
    pub probability: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    /// Relative SSE improvement of the two-piece fit over one line.
    pub sse_improvement: f64,
    /// True when the improvement falls below
    /// [`LOW_CONFIDENCE_IMPROVEMENT`], e.g. on a pure straight line.
    pub low_confidence: bool,
}

/// Prefix sums over (index, value) pairs so any segment's least-squares
/// line and SSE evaluate in constant time.
struct FitSums {
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxx: Vec<f64>,
    sxy: Vec<f64>,
    syy: Vec<f64>,
}

impl FitSums {
    fn new(y: &[f64]) -> Self {
        let n = y.len();
        let mut sums = FitSums {
            sx: vec![0.0; n + 1],
            sy: vec![0.0; n + 1],
            sxx: vec![0.0; n + 1],
            sxy: vec![0.0; n + 1],
            syy: vec![0.0; n + 1],
        };
        for (i, &v) in y.iter().enumerate() {
            let x = i as f64;
            sums.sx[i + 1] = sums.sx[i] + x;
            sums.sy[i + 1] = sums.sy[i] + v;
            sums.sxx[i + 1] = sums.sxx[i] + x * x;
            sums.sxy[i + 1] = sums.sxy[i] + x * v;
            sums.syy[i + 1] = sums.syy[i] + v * v;
        }
        sums
    }

    /// Least-squares line over indices `lo..=hi`: (slope, intercept, sse).
    fn segment_fit(&self, lo: usize, hi: usize) -> (f64, f64, f64) {
        let m = (hi - lo + 1) as f64;
        let sx = self.sx[hi + 1] - self.sx[lo];
        let sy = self.sy[hi + 1] - self.sy[lo];
        let sxx = self.sxx[hi + 1] - self.sxx[lo];
        let sxy = self.sxy[hi + 1] - self.sxy[lo];
        let syy = self.syy[hi + 1] - self.syy[lo];
        let denom = m * sxx - sx * sx;
        let slope = if denom == 0.0 {
            0.0
        } else {
            (m * sxy - sx * sy) / denom
        };
        let intercept = (sy - slope * sx) / m;
        let sse = (syy - intercept * sy - slope * sxy).max(0.0);
        (slope, intercept, sse)
    }
}

/// Candidate break indices: both segments keep at least 3 samples, with the
/// break sample shared.
fn candidate_range(n: usize) -> std::ops::RangeInclusive<usize> {
    2..=(n - 3)
}

/// Scans all interior breaks and returns the SSE-minimizing index with its
/// two segment fits. Ties break toward the smaller index.
fn best_break(sums: &FitSums, n: usize) -> (usize, (f64, f64, f64), (f64, f64, f64)) {
    let mut best_k = *candidate_range(n).start();
    let mut best_sse = f64::INFINITY;
    for k in candidate_range(n) {
        let left = sums.segment_fit(0, k);
        let right = sums.segment_fit(k, n - 1);
        let total = left.2 + right.2;
        if total < best_sse {
            best_sse = total;
            best_k = k;
        }
    }
    let left = sums.segment_fit(0, best_k);
    let right = sums.segment_fit(best_k, n - 1);
    (best_k, left, right)
}

pub fn changepoint(
    series: &[f64],
    n_boot: usize,
    seed: u64,
) -> Result<ChangepointResult, StatsError> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(StatsError::NotComputable(format!(
            "series length {n} below minimum {MIN_SERIES_LEN}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NotComputable("non-finite value".into()));
    }

    let sums = FitSums::new(series);
    let (candidate, left, right) = best_break(&sums, n);
    let two_piece_sse = left.2 + right.2;
    let (_, _, one_piece_sse) = sums.segment_fit(0, n - 1);
    // A one-piece SSE that is negligible against the series' own variation
    // is fit-arithmetic noise; treat it as an exact line.
    let mean = series.iter().sum::<f64>() / n as f64;
    let total_ss: f64 = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sse_improvement = if one_piece_sse > 1e-12 * total_ss.max(f64::MIN_POSITIVE) {
        ((one_piece_sse - two_piece_sse) / one_piece_sse).max(0.0)
    } else {
        0.0
    };

    // Fitted values from the winning two-piece model; the left line owns
    // the shared break sample.
    let fitted: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64;
            if i <= candidate {
                left.1 + left.0 * x
            } else {
                right.1 + right.0 * x
            }
        })
        .collect();
    let residuals: Vec<f64> = series.iter().zip(&fitted).map(|(y, f)| y - f).collect();

    let hits: u64 = (0..n_boot)
        .into_par_iter()
        .map(|replicate| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_add((replicate as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            );
            let pick = Uniform::new(0, n);
            let resampled: Vec<f64> = (0..n)
                .map(|i| fitted[i] + residuals[pick.sample(&mut rng)])
                .collect();
            let boot_sums = FitSums::new(&resampled);
            let (k, _, _) = best_break(&boot_sums, n);
            u64::from(k.abs_diff(candidate) <= 1)
        })
        .sum();
    let probability = if n_boot == 0 {
        0.0
    } else {
        hits as f64 / n_boot as f64
    };

    Ok(ChangepointResult {
        candidate_index: candidate,
        probability,
        left_slope: left.0,
        right_slope: right.0,
        sse_improvement,
        low_confidence: sse_improvement < LOW_CONFIDENCE_IMPROVEMENT,
    })
}
