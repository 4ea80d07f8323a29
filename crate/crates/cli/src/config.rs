//! Run configuration for the `report` pipeline.
//!
//! Values resolve in precedence order: command-line flags, then
//! `SIGNALPANEL_*` environment variables, then the optional `key=value`
//! config file, then defaults. Validation collects every problem instead
//! of stopping at the first.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

pub const ENV_PREFIX: &str = "SIGNALPANEL_";

/// Optional overrides from one layer (flags, env, or file).
#[derive(Debug, Clone, Default)]
pub struct ConfigLayer {
    pub values: BTreeMap<String, String>,
}

impl ConfigLayer {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Parses `key=value` lines; `#` starts a comment, blank lines ignored.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut layer = ConfigLayer::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    i + 1
                ));
            };
            layer.set(key.trim(), value.trim().to_string());
        }
        Ok(layer)
    }

    /// Collects `SIGNALPANEL_<KEY>` variables, lowercasing the key part.
    pub fn from_env() -> Self {
        let mut layer = ConfigLayer::default();
        for (key, value) in std::env::vars() {
            if let Some(rest) = key.strip_prefix(ENV_PREFIX) {
                layer.set(&rest.to_lowercase(), value);
            }
        }
        layer
    }
}

/// Fully resolved configuration for the batch pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tweets: PathBuf,
    pub polygons: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub census: PathBuf,
    pub land: PathBuf,
    pub pit: PathBuf,
    pub labels: PathBuf,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub neutral_lo: f64,
    pub neutral_hi: f64,
    pub alpha: f64,
    pub max_lag: usize,
    pub n_boot: usize,
    pub seed: u64,
    pub top_k: usize,
    pub bins: usize,
    /// Years up to and including this one form the early allotax corpus.
    pub allotax_split_year: i32,
    pub target_word: String,
    pub include_pandemic_pit: bool,
    pub out_dir: PathBuf,
}

pub const CONFIG_KEYS: [&str; 22] = [
    "tweets",
    "polygons",
    "lexicon",
    "stopwords",
    "census",
    "land",
    "pit",
    "labels",
    "window_start",
    "window_end",
    "neutral_lo",
    "neutral_hi",
    "alpha",
    "max_lag",
    "n_boot",
    "seed",
    "top_k",
    "bins",
    "allotax_split_year",
    "target_word",
    "include_pandemic_pit",
    "out_dir",
];

impl RunConfig {
    /// Resolves layers (first layer wins) and validates, reporting every
    /// problem found.
    pub fn resolve(layers: &[ConfigLayer]) -> Result<RunConfig, Vec<String>> {
        let mut problems = Vec::new();
        let get = |key: &str| -> Option<&String> {
            layers.iter().find_map(|layer| layer.values.get(key))
        };
        for layer in layers {
            for key in layer.values.keys() {
                if !CONFIG_KEYS.contains(&key.as_str()) {
                    problems.push(format!("unknown config key: {key}"));
                }
            }
        }

        let mut path_of = |key: &str, required: bool| -> Option<PathBuf> {
            match get(key) {
                Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
                _ => {
                    if required {
                        problems.push(format!("missing required path: {key}"));
                    }
                    None
                }
            }
        };
        let tweets = path_of("tweets", true);
        let polygons = path_of("polygons", true);
        let lexicon = path_of("lexicon", true);
        let stopwords = path_of("stopwords", false);
        let census = path_of("census", true);
        let land = path_of("land", true);
        let pit = path_of("pit", true);
        let labels = path_of("labels", true);
        let out_dir = get("out_dir").map(PathBuf::from).unwrap_or_else(|| "out".into());

        let parse_or = |key: &str, default: &str| -> String {
            get(key).cloned().unwrap_or_else(|| default.to_string())
        };
        let window_start = parse_date(&parse_or("window_start", "2010-03-01"), "window_start")
            .map_err(|e| problems.push(e))
            .ok();
        let window_end = parse_date(&parse_or("window_end", "2022-12-31"), "window_end")
            .map_err(|e| problems.push(e))
            .ok();
        let neutral_lo = parse_num::<f64>(&parse_or("neutral_lo", "4.5"), "neutral_lo")
            .map_err(|e| problems.push(e))
            .ok();
        let neutral_hi = parse_num::<f64>(&parse_or("neutral_hi", "5.5"), "neutral_hi")
            .map_err(|e| problems.push(e))
            .ok();
        let alpha = parse_num::<f64>(&parse_or("alpha", "0.3333333333333333"), "alpha")
            .map_err(|e| problems.push(e))
            .ok();
        let max_lag = parse_num::<usize>(&parse_or("max_lag", "9"), "max_lag")
            .map_err(|e| problems.push(e))
            .ok();
        let n_boot = parse_num::<usize>(&parse_or("n_boot", "1000"), "n_boot")
            .map_err(|e| problems.push(e))
            .ok();
        let seed = parse_num::<u64>(&parse_or("seed", "42"), "seed")
            .map_err(|e| problems.push(e))
            .ok();
        let top_k = parse_num::<usize>(&parse_or("top_k", "20"), "top_k")
            .map_err(|e| problems.push(e))
            .ok();
        let bins = parse_num::<usize>(&parse_or("bins", "16"), "bins")
            .map_err(|e| problems.push(e))
            .ok();
        let allotax_split_year =
            parse_num::<i32>(&parse_or("allotax_split_year", "2015"), "allotax_split_year")
                .map_err(|e| problems.push(e))
                .ok();
        let target_word = parse_or("target_word", "homeless");
        let include_pandemic_pit = match parse_or("include_pandemic_pit", "false").as_str() {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => {
                problems.push(format!("include_pandemic_pit must be boolean, got {other}"));
                false
            }
        };

        // Cross-field checks run only on values that parsed.
        if let (Some(start), Some(end)) = (window_start, window_end) {
            if start > end {
                problems.push(format!("window_start {start} is after window_end {end}"));
            }
        }
        if let (Some(lo), Some(hi)) = (neutral_lo, neutral_hi) {
            if lo > hi {
                problems.push(format!("neutral_lo {lo} exceeds neutral_hi {hi}"));
            }
        }
        if let Some(a) = alpha {
            if a.is_nan() || a < 0.0 {
                problems.push(format!("alpha must be non-negative, got {a}"));
            }
        }
        if let Some(b) = bins {
            if b < 8 {
                problems.push(format!("bins must be at least 8, got {b}"));
            }
        }
        for (key, path) in [
            ("tweets", &tweets),
            ("polygons", &polygons),
            ("lexicon", &lexicon),
            ("census", &census),
            ("land", &land),
            ("pit", &pit),
            ("labels", &labels),
            ("stopwords", &stopwords),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    problems.push(format!("{key} file does not exist: {}", p.display()));
                }
            }
        }

        if !problems.is_empty() {
            return Err(problems);
        }
        Ok(RunConfig {
            tweets: tweets.unwrap(),
            polygons: polygons.unwrap(),
            lexicon: lexicon.unwrap(),
            stopwords,
            census: census.unwrap(),
            land: land.unwrap(),
            pit: pit.unwrap(),
            labels: labels.unwrap(),
            window_start: window_start.unwrap(),
            window_end: window_end.unwrap(),
            neutral_lo: neutral_lo.unwrap(),
            neutral_hi: neutral_hi.unwrap(),
            alpha: alpha.unwrap(),
            max_lag: max_lag.unwrap(),
            n_boot: n_boot.unwrap(),
            seed: seed.unwrap(),
            top_k: top_k.unwrap(),
            bins: bins.unwrap(),
            allotax_split_year: allotax_split_year.unwrap(),
            target_word,
            include_pandemic_pit,
            out_dir,
        })
    }
}

fn parse_date(text: &str, key: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|_| format!("{key} must be YYYY-MM-DD, got {text:?}"))
}

fn parse_num<T: std::str::FromStr>(text: &str, key: &str) -> Result<T, String> {
    text.parse()
        .map_err(|_| format!("{key}: cannot parse {text:?}"))
}
