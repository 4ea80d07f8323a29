//! Lexicon-based compound sentiment on the 1-9 happiness scale.
//!
//! A corpus slice is scored as the frequency-weighted mean of its tokens'
//! lexicon scores, after excluding words inside the neutral band, then
//! affinely rescaled from [1,9] to [-1,1]. Slices with no scorable tokens
//! get absent scores rather than a fake neutral zero.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Record;
use crate::textprep::{merge_counts, prepare_tokens, StopwordList, TokenCounts};

/// Inclusive score band excluded from scoring.
pub const DEFAULT_NEUTRAL_BAND: (f64, f64) = (4.5, 5.5);

/// Consumers are advised to flag groups with fewer matched tokens than this.
pub const DEFAULT_MIN_MATCHED_TOKENS: u64 = 100;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("score {0} outside [1,9]")]
    ScoreOutOfRange(f64),
}

/// One scored word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub word: String,
    pub score: f64,
}

/// Word-to-score lookup with scores on the 1-9 scale.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    scores: HashMap<String, f64>,
}

impl Lexicon {
    pub fn from_entries<I: IntoIterator<Item = LexiconEntry>>(
        entries: I,
    ) -> Result<Self, LexiconError> {
        let mut scores = HashMap::new();
        for entry in entries {
            if !(1.0..=9.0).contains(&entry.score) {
                return Err(LexiconError::ScoreOutOfRange(entry.score));
            }
            if scores.insert(entry.word.clone(), entry.score).is_some() {
                return Err(LexiconError::Format {
                    line: 0,
                    message: format!("duplicate word: {}", entry.word),
                });
            }
        }
        Ok(Self { scores })
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.scores.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Loads a TSV lexicon, one `word<TAB>score` row per line.
///
/// Duplicate words and scores outside [1,9] are rejected with the
/// offending line number. Blank lines are ignored.
pub fn load_lexicon<R: BufRead>(reader: R) -> Result<Lexicon, LexiconError> {
    let mut scores = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (word, score_text) = trimmed.split_once('\t').ok_or(LexiconError::Format {
            line: lineno,
            message: "expected word<TAB>score".into(),
        })?;
        let score: f64 = score_text.trim().parse().map_err(|_| LexiconError::Format {
            line: lineno,
            message: format!("not a number: {score_text}"),
        })?;
        if !(1.0..=9.0).contains(&score) {
            return Err(LexiconError::Format {
                line: lineno,
                message: format!("score {score} outside [1,9]"),
            });
        }
        let word = word.trim().to_string();
        if scores.insert(word.clone(), score).is_some() {
            return Err(LexiconError::Format {
                line: lineno,
                message: format!("duplicate word: {word}"),
            });
        }
    }
    Ok(Lexicon { scores })
}

pub fn load_lexicon_file(path: &std::path::Path) -> Result<Lexicon, LexiconError> {
    let file = std::fs::File::open(path)?;
    load_lexicon(std::io::BufReader::new(file))
}

/// Compound sentiment of one corpus slice. `raw_score` and `rescaled` are
/// absent exactly when no token matched the lexicon outside the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentResult {
    pub raw_score: Option<f64>,
    pub rescaled: Option<f64>,
    pub matched_tokens: u64,
    pub total_tokens: u64,
}

impl SentimentResult {
    pub fn is_low_sample(&self, min_matched: u64) -> bool {
        self.matched_tokens < min_matched
    }
}

/// Affine map from the 1-9 scale onto [-1,1]: `(raw - 5) / 4`.
pub fn rescale(raw: f64) -> Result<f64, LexiconError> {
    if !(1.0..=9.0).contains(&raw) {
        return Err(LexiconError::ScoreOutOfRange(raw));
    }
    Ok((raw - 5.0) / 4.0)
}

/// Frequency-weighted mean score of the counts over lexicon words outside
/// the closed `neutral_band`; absent when nothing matches.
pub fn score_corpus(
    counts: &TokenCounts,
    lexicon: &Lexicon,
    neutral_band: (f64, f64),
) -> SentimentResult {
    let (band_lo, band_hi) = neutral_band;
    let mut weighted = 0.0;
    let mut matched: u64 = 0;
    for (token, count) in counts.iter() {
        if let Some(score) = lexicon.score(token) {
            if score >= band_lo && score <= band_hi {
                continue;
            }
            weighted += score * count as f64;
            matched += count;
        }
    }
    if matched == 0 {
        return SentimentResult {
            raw_score: None,
            rescaled: None,
            matched_tokens: 0,
            total_tokens: counts.total_tokens(),
        };
    }
    let raw = weighted / matched as f64;
    SentimentResult {
        raw_score: Some(raw),
        rescaled: Some((raw - 5.0) / 4.0),
        matched_tokens: matched,
        total_tokens: counts.total_tokens(),
    }
}

/// Aggregation key for sentiment series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    /// Calendar month across all records, keyed "YYYY-MM" by local time.
    Month,
    /// Calendar year across all records, keyed "YYYY".
    Year,
    /// Per state and year, keyed "SS-YYYY"; unresolved records are skipped.
    StateYear,
}

impl GroupKey {
    fn key_for(&self, record: &Record) -> Option<String> {
        match self {
            GroupKey::Month => Some(record.local_month_key()),
            GroupKey::Year => Some(record.local_year().to_string()),
            GroupKey::StateYear => record.state.map(|_| record.state_year.clone()),
        }
    }
}

/// Scores each group on the merged token counts of its records, never as a
/// mean of per-record scores. Groups with zero matched tokens are still
/// emitted, with absent scores. Output is sorted by key.
pub fn sentiment_series(
    records: &[Record],
    lexicon: &Lexicon,
    group_key: GroupKey,
    stopwords: Option<&StopwordList>,
    neutral_band: (f64, f64),
) -> Vec<(String, SentimentResult)> {
    let mut groups: std::collections::BTreeMap<String, Vec<&Record>> =
        std::collections::BTreeMap::new();
    for record in records {
        if let Some(key) = group_key.key_for(record) {
            groups.entry(key).or_default().push(record);
        }
    }
    groups
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(key, members)| {
            let counts = members
                .iter()
                .map(|r| {
                    let mut c = TokenCounts::new();
                    for token in prepare_tokens(&r.raw.text, stopwords) {
                        c.add(&token);
                    }
                    c
                })
                .reduce(merge_counts)
                .unwrap_or_default();
            (key, score_corpus(&counts, lexicon, neutral_band))
        })
        .collect()
}

/// Writes `key,raw_score,rescaled,matched_tokens,total_tokens`; absent
/// scores become empty cells.
pub fn write_series_csv<W: Write>(
    series: &[(String, SentimentResult)],
    writer: W,
) -> Result<(), std::io::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["key", "raw_score", "rescaled", "matched_tokens", "total_tokens"])?;
    for (key, result) in series {
        wtr.write_record([
            key.clone(),
            result.raw_score.map(|v| v.to_string()).unwrap_or_default(),
            result.rescaled.map(|v| v.to_string()).unwrap_or_default(),
            result.matched_tokens.to_string(),
            result.total_tokens.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
