//! Rank-turbulence divergence between two token distributions, per-type
//! contributions (word shift), and allotaxonograph cell data.
//!
//! Types are ranked within each corpus by descending count with average-tie
//! fractional ranks. A type absent from one corpus receives there the tied
//! rank `N_present + (N_absent + 1) / 2`, i.e. all exclusive types share
//! the average of the unoccupied bottom ranks. Per-type contributions use
//! the divergence kernel
//! `(alpha+1)/alpha * |1/r1^alpha - 1/r2^alpha|^(1/(alpha+1))`,
//! with the alpha = 0 and alpha -> infinity limit forms, normalized by the
//! same sum evaluated on the disjoint rearrangement of the two corpora so
//! the total lies in [0, 1].

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::ranks::{average_ranks, RankOrder};
use crate::textprep::TokenCounts;

/// Default divergence exponent.
pub const DEFAULT_ALPHA: f64 = 1.0 / 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum AllotaxError {
    #[error("not computable: {0}")]
    NotComputable(String),
    #[error("alpha must be non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("bins_per_side must be at least 8, got {0}")]
    InvalidBins(usize),
}

/// One ranked type within a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedType {
    pub token: String,
    pub count: u64,
    pub rank: f64,
}

/// A corpus with descending-count fractional ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCorpus {
    entries: Vec<RankedType>,
    index: HashMap<String, usize>,
}

impl RankedCorpus {
    pub fn entries(&self) -> &[RankedType] {
        &self.entries
    }

    pub fn n_types(&self) -> usize {
        self.entries.len()
    }

    pub fn rank_of(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.entries[i].rank)
    }
}

/// Ranks a non-empty corpus by descending count, ties averaged, output in
/// rank order with token tie-break.
pub fn rank_corpus(counts: &TokenCounts) -> Result<RankedCorpus, AllotaxError> {
    if counts.is_empty() {
        return Err(AllotaxError::NotComputable("empty corpus".into()));
    }
    let tokens: Vec<(&str, u64)> = counts.iter().collect();
    let values: Vec<f64> = tokens.iter().map(|&(_, c)| c as f64).collect();
    let ranks = average_ranks(&values, RankOrder::Descending);
    let mut entries: Vec<RankedType> = tokens
        .iter()
        .zip(ranks)
        .map(|(&(token, count), rank)| RankedType {
            token: token.to_string(),
            count,
            rank,
        })
        .collect();
    entries.sort_by(|a, b| {
        a.rank
            .partial_cmp(&b.rank)
            .unwrap()
            .then_with(|| a.token.cmp(&b.token))
    });
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.token.clone(), i))
        .collect();
    Ok(RankedCorpus { entries, index })
}

/// Which corpus a type's divergence contribution favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Better ranked in the first corpus. Types with equal ranks carry this
    /// marker too; their contribution is exactly zero.
    Left,
    /// Better ranked in the second corpus.
    Right,
    /// Present only in the first corpus.
    ExclusiveLeft,
    /// Present only in the second corpus.
    ExclusiveRight,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::ExclusiveLeft => "exclusive-left",
            Side::ExclusiveRight => "exclusive-right",
        }
    }

    #[cfg(test)]
    fn swapped(&self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::ExclusiveLeft => Side::ExclusiveRight,
            Side::ExclusiveRight => Side::ExclusiveLeft,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeContribution {
    pub token: String,
    pub rank1: f64,
    pub rank2: f64,
    pub contribution: f64,
    pub side: Side,
}

/// Full divergence report for a corpus pair: per-type contributions sum to
/// `total`, sorted by descending contribution with lexicographic ties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub alpha: f64,
    pub total: f64,
    pub normalization: f64,
    pub contributions: Vec<TypeContribution>,
}

/// Unnormalized divergence kernel for one type given its two ranks.
fn kernel(r1: f64, r2: f64, alpha: f64) -> f64 {
    if r1 == r2 {
        return 0.0;
    }
    if alpha == 0.0 {
        return (r1.ln() - r2.ln()).abs();
    }
    if alpha.is_infinite() {
        return 1.0 / r1.min(r2);
    }
    let prefactor = (alpha + 1.0) / alpha;
    let diff = (r1.powf(-alpha) - r2.powf(-alpha)).abs();
    prefactor * diff.powf(1.0 / (alpha + 1.0))
}

/// Tied rank assigned in a corpus of `n_present` types to each of
/// `n_absent` types it lacks.
fn exclusive_rank(n_present: usize, n_absent: usize) -> f64 {
    n_present as f64 + (n_absent as f64 + 1.0) / 2.0
}

/// Rank-turbulence divergence of two non-empty corpora at exponent
/// `alpha >= 0` (`f64::INFINITY` selects the limit form).
pub fn rtd(
    c1: &TokenCounts,
    c2: &TokenCounts,
    alpha: f64,
) -> Result<DivergenceReport, AllotaxError> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(AllotaxError::InvalidAlpha(alpha));
    }
    let ranked1 = rank_corpus(c1)?;
    let ranked2 = rank_corpus(c2)?;
    let n1 = ranked1.n_types();
    let n2 = ranked2.n_types();

    // Exclusive-type tied ranks in the real (possibly overlapping) pair.
    let absent_from_1 = ranked2
        .entries()
        .iter()
        .filter(|e| ranked1.rank_of(&e.token).is_none())
        .count();
    let absent_from_2 = ranked1
        .entries()
        .iter()
        .filter(|e| ranked2.rank_of(&e.token).is_none())
        .count();
    let tied_rank_1 = exclusive_rank(n1, absent_from_1);
    let tied_rank_2 = exclusive_rank(n2, absent_from_2);

    // Disjoint-rearrangement normalization: every type of one corpus is
    // treated as absent from the other.
    let disjoint_rank_1 = exclusive_rank(n1, n2);
    let disjoint_rank_2 = exclusive_rank(n2, n1);
    let mut normalization = 0.0;
    for e in ranked1.entries() {
        normalization += kernel(e.rank, disjoint_rank_2, alpha);
    }
    for e in ranked2.entries() {
        normalization += kernel(disjoint_rank_1, e.rank, alpha);
    }
    if normalization == 0.0 {
        return Err(AllotaxError::NotComputable(
            "degenerate normalization".into(),
        ));
    }

    let mut contributions: Vec<TypeContribution> = Vec::with_capacity(n1 + absent_from_1);
    let mut total = 0.0;
    for e in ranked1.entries() {
        let r1 = e.rank;
        let (r2, side) = match ranked2.rank_of(&e.token) {
            Some(r2) => {
                let side = if r1 > r2 { Side::Right } else { Side::Left };
                (r2, side)
            }
            None => (tied_rank_2, Side::ExclusiveLeft),
        };
        let contribution = kernel(r1, r2, alpha) / normalization;
        total += contribution;
        contributions.push(TypeContribution {
            token: e.token.clone(),
            rank1: r1,
            rank2: r2,
            contribution,
            side,
        });
    }
    for e in ranked2.entries() {
        if ranked1.rank_of(&e.token).is_some() {
            continue;
        }
        let contribution = kernel(tied_rank_1, e.rank, alpha) / normalization;
        total += contribution;
        contributions.push(TypeContribution {
            token: e.token.clone(),
            rank1: tied_rank_1,
            rank2: e.rank,
            contribution,
            side: Side::ExclusiveRight,
        });
    }
    contributions.sort_by(|a, b| {
        b.contribution
            .partial_cmp(&a.contribution)
            .unwrap()
            .then_with(|| a.token.cmp(&b.token))
    });
    Ok(DivergenceReport {
        alpha,
        total,
        normalization,
        contributions,
    })
}

/// Top contributing types, zero contributions filtered, ordered by
/// descending contribution with lexicographic tie-break.
pub fn word_shift(report: &DivergenceReport, top_k: usize) -> Vec<TypeContribution> {
    report
        .contributions
        .iter()
        .filter(|c| c.contribution > 0.0)
        .take(top_k)
        .cloned()
        .collect()
}

/// Writes `token,rank1,rank2,contribution,side` in report order.
pub fn write_report_csv<W: Write>(
    report: &DivergenceReport,
    writer: W,
) -> Result<(), std::io::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["token", "rank1", "rank2", "contribution", "side"])?;
    for c in &report.contributions {
        wtr.write_record([
            c.token.clone(),
            c.rank1.to_string(),
            c.rank2.to_string(),
            c.contribution.to_string(),
            c.side.as_str().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Log-rank double histogram plus the two exclusive-type edge vectors;
/// plot-ready data, no rendering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellGrid {
    pub bins_per_side: usize,
    /// Upper end of the log10-rank axis shared by both sides.
    pub log_rank_max: f64,
    /// Sparse `(row, col, count)` cells: row bins log10 rank in the first
    /// corpus, col in the second. Sorted by (row, col).
    pub cells: Vec<(usize, usize, u64)>,
    /// Shared-type totals binned by first-corpus rank only (left edge),
    /// for types absent from the second corpus.
    pub exclusive_left: Vec<u64>,
    /// Types absent from the first corpus, binned by second-corpus rank.
    pub exclusive_right: Vec<u64>,
}

/// Bins both corpora's ranks into a `bins_per_side` square grid in
/// log10-rank space; exclusive types land on the two edge vectors.
pub fn allotaxonograph_cells(
    c1: &TokenCounts,
    c2: &TokenCounts,
    bins_per_side: usize,
) -> Result<CellGrid, AllotaxError> {
    if bins_per_side < 8 {
        return Err(AllotaxError::InvalidBins(bins_per_side));
    }
    let ranked1 = rank_corpus(c1)?;
    let ranked2 = rank_corpus(c2)?;
    let max_rank = ranked1
        .entries()
        .iter()
        .chain(ranked2.entries())
        .map(|e| e.rank)
        .fold(1.0_f64, f64::max);
    let log_rank_max = max_rank.log10();
    let scale = if log_rank_max > 0.0 { log_rank_max } else { 1.0 };
    let bin_of = |rank: f64| -> usize {
        let b = (rank.log10() / scale * bins_per_side as f64).floor() as usize;
        b.min(bins_per_side - 1)
    };

    let mut cell_counts: std::collections::BTreeMap<(usize, usize), u64> =
        std::collections::BTreeMap::new();
    let mut exclusive_left = vec![0u64; bins_per_side];
    let mut exclusive_right = vec![0u64; bins_per_side];
    for e in ranked1.entries() {
        match ranked2.rank_of(&e.token) {
            Some(r2) => {
                *cell_counts.entry((bin_of(e.rank), bin_of(r2))).or_insert(0) += 1;
            }
            None => exclusive_left[bin_of(e.rank)] += 1,
        }
    }
    for e in ranked2.entries() {
        if ranked1.rank_of(&e.token).is_none() {
            exclusive_right[bin_of(e.rank)] += 1;
        }
    }
    Ok(CellGrid {
        bins_per_side,
        log_rank_max,
        cells: cell_counts.into_iter().map(|((i, j), c)| (i, j, c)).collect(),
        exclusive_left,
        exclusive_right,
    })
}
