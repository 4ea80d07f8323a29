//! Account-frequency and account-type composition summaries for corpus
//! slices: single- versus multi-post account splits, the share of tweets
//! they generate, and the class makeup of the top-k highest-frequency
//! accounts.
//!
//! Account classes are never inferred; they come from a label file keyed by
//! author id.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AccountsError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("unlabeled top-k accounts: {}", .0.join(", "))]
    MissingLabel(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AccountClass {
    Individual,
    Entity,
}

impl AccountClass {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "individual" => Some(AccountClass::Individual),
            "entity" => Some(AccountClass::Entity),
            _ => None,
        }
    }
}

/// Subtype taxonomy: Agency, News, and Legal belong to entities;
/// Politician and Journalist to individuals; anything else is Other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum AccountSubtype {
    Agency,
    News,
    Legal,
    Politician,
    Journalist,
    Other(String),
}

impl AccountSubtype {
    fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "agency" => AccountSubtype::Agency,
            "news" => AccountSubtype::News,
            "legal" => AccountSubtype::Legal,
            "politician" => AccountSubtype::Politician,
            "journalist" => AccountSubtype::Journalist,
            other => AccountSubtype::Other(other.to_string()),
        }
    }

    fn consistent_with(&self, class: AccountClass) -> bool {
        match self {
            AccountSubtype::Agency | AccountSubtype::News | AccountSubtype::Legal => {
                class == AccountClass::Entity
            }
            AccountSubtype::Politician | AccountSubtype::Journalist => {
                class == AccountClass::Individual
            }
            AccountSubtype::Other(_) => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountLabel {
    pub author_id: String,
    pub class: AccountClass,
    pub subtype: Option<AccountSubtype>,
}

/// Label lookup keyed by author id.
#[derive(Debug, Clone, Default)]
pub struct AccountLabels {
    labels: HashMap<String, AccountLabel>,
}

impl AccountLabels {
    pub fn get(&self, author_id: &str) -> Option<&AccountLabel> {
        self.labels.get(author_id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn insert(&mut self, label: AccountLabel) {
        self.labels.insert(label.author_id.clone(), label);
    }

    /// Reads `author_id,class,subtype` rows; subtype may be empty. A
    /// subtype inconsistent with its class is rejected with the line number.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, AccountsError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut out = Self::default();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let author_id = row
                .get(0)
                .filter(|s| !s.is_empty())
                .ok_or(AccountsError::Format {
                    line,
                    message: "missing author_id".into(),
                })?
                .to_string();
            let class = row
                .get(1)
                .and_then(AccountClass::parse)
                .ok_or(AccountsError::Format {
                    line,
                    message: "class must be Individual or Entity".into(),
                })?;
            let subtype = match row.get(2) {
                Some("") | None => None,
                Some(s) => Some(AccountSubtype::parse(s)),
            };
            if let Some(sub) = &subtype {
                if !sub.consistent_with(class) {
                    return Err(AccountsError::Format {
                        line,
                        message: format!("subtype {sub:?} inconsistent with class {class:?}"),
                    });
                }
            }
            out.insert(AccountLabel {
                author_id,
                class,
                subtype,
            });
        }
        Ok(out)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, AccountsError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Per-account tweet counts for a slice, descending with a stable
/// author-id tie-break.
pub fn account_frequency<'a, I>(author_ids: I) -> Vec<(String, u64)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for id in author_ids {
        *counts.entry(id).or_insert(0) += 1;
    }
    let mut out: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(id, c)| (id.to_string(), c))
        .collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopAccount {
    pub rank: usize,
    pub author_id: String,
    pub tweet_count: u64,
    pub class: AccountClass,
    pub subtype: Option<AccountSubtype>,
}

/// Composition summary of one corpus slice. Percentages are on the 0-100
/// scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountSampleSummary {
    pub n_tweets: u64,
    pub n_accounts: u64,
    pub single_post_accounts: u64,
    pub multi_post_accounts: u64,
    pub single_post_pct: f64,
    pub multi_post_pct: f64,
    pub tweets_from_single_pct: f64,
    pub tweets_from_multi_pct: f64,
    pub top_k: Vec<TopAccount>,
    pub top_k_individual_accounts: u64,
    pub top_k_entity_accounts: u64,
    pub top_k_individual_account_pct: f64,
    pub top_k_entity_account_pct: f64,
    /// Reduced individual:entity account ratio within the top k, e.g. "9:1".
    pub individual_entity_ratio: String,
    pub top_k_tweets: u64,
    pub top_k_tweets_pct_of_all: f64,
    pub top_k_tweets_individual_pct: f64,
    pub top_k_tweets_entity_pct: f64,
}

fn pct(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn ratio_string(a: u64, b: u64) -> String {
    let g = gcd(a, b).max(1);
    format!("{}:{}", a / g, b / g)
}

/// Summarizes a slice's account composition. Labels must cover at least
/// the top-k accounts; any unlabeled ones are reported together in
/// [`AccountsError::MissingLabel`].
pub fn summarize<'a, I>(
    author_ids: I,
    labels: &AccountLabels,
    k: usize,
) -> Result<AccountSampleSummary, AccountsError>
where
    I: IntoIterator<Item = &'a str>,
{
    let frequency = account_frequency(author_ids);
    let n_accounts = frequency.len() as u64;
    let n_tweets: u64 = frequency.iter().map(|(_, c)| c).sum();
    let single: u64 = frequency.iter().filter(|(_, c)| *c == 1).count() as u64;
    let multi = n_accounts - single;
    let tweets_from_multi: u64 = frequency
        .iter()
        .filter(|(_, c)| *c > 1)
        .map(|(_, c)| c)
        .sum();
    let tweets_from_single = n_tweets - tweets_from_multi;

    let top_slice = &frequency[..k.min(frequency.len())];
    let unlabeled: Vec<String> = top_slice
        .iter()
        .filter(|(id, _)| labels.get(id).is_none())
        .map(|(id, _)| id.clone())
        .collect();
    if !unlabeled.is_empty() {
        return Err(AccountsError::MissingLabel(unlabeled));
    }
    let top_k: Vec<TopAccount> = top_slice
        .iter()
        .enumerate()
        .map(|(i, (id, count))| {
            let label = labels.get(id).expect("checked above");
            TopAccount {
                rank: i + 1,
                author_id: id.clone(),
                tweet_count: *count,
                class: label.class,
                subtype: label.subtype.clone(),
            }
        })
        .collect();

    let top_k_total = top_k.len() as u64;
    let top_k_individual = top_k
        .iter()
        .filter(|a| a.class == AccountClass::Individual)
        .count() as u64;
    let top_k_entity = top_k_total - top_k_individual;
    let top_k_tweets: u64 = top_k.iter().map(|a| a.tweet_count).sum();
    let top_k_tweets_individual: u64 = top_k
        .iter()
        .filter(|a| a.class == AccountClass::Individual)
        .map(|a| a.tweet_count)
        .sum();
    let top_k_tweets_entity = top_k_tweets - top_k_tweets_individual;

    Ok(AccountSampleSummary {
        n_tweets,
        n_accounts,
        single_post_accounts: single,
        multi_post_accounts: multi,
        single_post_pct: pct(single, n_accounts),
        multi_post_pct: pct(multi, n_accounts),
        tweets_from_single_pct: pct(tweets_from_single, n_tweets),
        tweets_from_multi_pct: pct(tweets_from_multi, n_tweets),
        top_k,
        top_k_individual_accounts: top_k_individual,
        top_k_entity_accounts: top_k_entity,
        top_k_individual_account_pct: pct(top_k_individual, top_k_total),
        top_k_entity_account_pct: pct(top_k_entity, top_k_total),
        individual_entity_ratio: ratio_string(top_k_individual, top_k_entity),
        top_k_tweets,
        top_k_tweets_pct_of_all: pct(top_k_tweets, n_tweets),
        top_k_tweets_individual_pct: pct(top_k_tweets_individual, top_k_tweets),
        top_k_tweets_entity_pct: pct(top_k_tweets_entity, top_k_tweets),
    })
}

/// Default top-account table size.
pub const DEFAULT_TOP_K: usize = 20;
