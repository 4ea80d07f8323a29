//! Text cleaning, tokenization, and mergeable 1-gram frequency counts.
//!
//! The cleaning pipeline runs in three stages: [`clean_text`] strips emoji,
//! URLs, and @-mentions; [`split_camel_hashtags`] expands camel-case
//! hashtags into their component words; [`tokenize`] lowercases and keeps
//! alphanumeric blocks, optionally dropping stopwords. [`TokenCounts`]
//! shards built from tokenized records merge across workers.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Scheme-prefixed URLs plus bare www. forms.
    RE.get_or_init(|| Regex::new(r"(?:[A-Za-z][A-Za-z0-9+.-]*://\S+|\bwww\.\S+)").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

fn emoji_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Extended_Pictographic covers all emoji blocks; variation selector-16
    // and zero-width joiner are sequence glue that would otherwise linger.
    RE.get_or_init(|| Regex::new(r"[\p{Extended_Pictographic}\u{FE0F}\u{200D}]").unwrap())
}

/// Removes URLs (scheme and bare `www.` forms), @-mentions, and emoji, then
/// collapses runs of whitespace to single spaces and trims the ends.
pub fn clean_text(text: &str) -> String {
    let no_urls = url_re().replace_all(text, " ");
    let no_mentions = mention_re().replace_all(&no_urls, " ");
    let no_emoji = emoji_re().replace_all(&no_mentions, " ");
    collapse_spaces(&no_emoji)
}

fn collapse_spaces(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_space = true;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !last_space {
                out.push(' ');
                last_space = true;
            }
        } else {
            out.push(ch);
            last_space = false;
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Expands camel-case hashtags into their component words, lowercased.
///
/// A hashtag body with at least two uppercase-initiated segments is replaced
/// by those segments joined with spaces (`#HomelessnessFirst` becomes
/// `homelessness first`). Runs of capitals group into one segment up to the
/// capital that starts the next word (`#ABCShelter` becomes `abc shelter`).
/// Hashtags without a second uppercase segment pass through unchanged; the
/// `#` on those is stripped later, at tokenization.
pub fn split_camel_hashtags(text: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    for token in text.split_whitespace() {
        match split_one_hashtag(token) {
            Some(expanded) => out.push(expanded),
            None => out.push(token.to_string()),
        }
    }
    out.join(" ")
}

fn split_one_hashtag(token: &str) -> Option<String> {
    let body = token.strip_prefix('#')?;
    // Segment only the leading alphanumeric run; any trailing residue
    // (punctuation) stays attached to the last segment.
    let alnum_len = body
        .char_indices()
        .find(|(_, c)| !c.is_alphanumeric())
        .map(|(i, _)| i)
        .unwrap_or(body.len());
    let (head, rest) = body.split_at(alnum_len);
    if head.is_empty() {
        return None;
    }

    let segments = camel_segments(head);
    let upper_initiated = segments
        .iter()
        .filter(|s| s.chars().next().is_some_and(char::is_uppercase))
        .count();
    if upper_initiated < 2 {
        return None;
    }

    let mut joined = segments
        .iter()
        .map(|s| s.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ");
    joined.push_str(rest);
    Some(joined)
}

/// Splits an identifier-style string at case transitions. A boundary falls
/// before each uppercase letter that follows a non-uppercase character, and
/// before the last uppercase letter of a capital run that is followed by a
/// lowercase letter ("ABCShelter" -> ["ABC", "Shelter"]).
fn camel_segments(s: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut boundaries = vec![0];
    for w in 1..chars.len() {
        let (idx, cur) = chars[w];
        let prev = chars[w - 1].1;
        let next = chars.get(w + 1).map(|&(_, c)| c);
        if cur.is_uppercase() {
            if !prev.is_uppercase() {
                boundaries.push(idx);
            } else if next.is_some_and(char::is_lowercase) {
                boundaries.push(idx);
            }
        }
    }
    boundaries.dedup();
    let mut segments = Vec::with_capacity(boundaries.len());
    for (k, &start) in boundaries.iter().enumerate() {
        let end = boundaries.get(k + 1).copied().unwrap_or(s.len());
        segments.push(&s[start..end]);
    }
    segments
}

/// Set of lowercase tokens removed at tokenization when supplied.
#[derive(Debug, Clone, Default)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Self {
            words: words.into_iter().map(|w| w.into().to_lowercase()).collect(),
        }
    }

    /// Loads one token per line, UTF-8; blank lines ignored.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, TextError> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let w = line.trim();
            if !w.is_empty() {
                words.insert(w.to_lowercase());
            }
        }
        Ok(Self { words })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TextError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Lowercases, deletes apostrophes, and splits on every remaining
/// non-alphanumeric character; drops stopwords when a list is given.
///
/// Apostrophes are deleted rather than treated as separators, so "man's"
/// yields the single token "mans". Token order follows text order.
pub fn tokenize(text: &str, stopwords: Option<&StopwordList>) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch == '\'' || ch == '\u{2019}' {
            continue;
        }
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                cur.push(lower);
            }
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    match stopwords {
        Some(list) => tokens.into_iter().filter(|t| !list.contains(t)).collect(),
        None => tokens,
    }
}

/// Runs the full preparation pipeline on raw record text.
pub fn prepare_tokens(text: &str, stopwords: Option<&StopwordList>) -> Vec<String> {
    tokenize(&split_camel_hashtags(&clean_text(text)), stopwords)
}

/// Type-to-frequency counts for a corpus slice. Shards merge
/// commutatively and associatively, with the empty value as identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    counts: BTreeMap<String, u64>,
    total_tokens: u64,
}

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str) {
        *self.counts.entry(token.to_string()).or_insert(0) += 1;
        self.total_tokens += 1;
    }

    pub fn add_count(&mut self, token: &str, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(token.to_string()).or_insert(0) += count;
        self.total_tokens += count;
    }

    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Number of distinct types.
    pub fn n_types(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    /// Summed count of tokens equal to `target` (whole-token match).
    pub fn count_matching_word(&self, target: &str) -> u64 {
        self.get(target)
    }

    /// Summed count of tokens containing `target` as a substring.
    pub fn count_matching_substring(&self, target: &str) -> u64 {
        self.counts
            .iter()
            .filter(|(t, _)| t.contains(target))
            .map(|(_, &c)| c)
            .sum()
    }

    /// Writes `token,count` rows sorted by descending count, ties broken
    /// lexicographically by token.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TextError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["token", "count"])?;
        for (token, count) in self.sorted_entries() {
            wtr.write_record([token, &count.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self, TextError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut out = Self::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let token = row
                .get(0)
                .ok_or_else(|| TextError::Format {
                    line: i + 2,
                    message: "missing token column".into(),
                })?
                .to_string();
            let count: u64 = row
                .get(1)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| TextError::Format {
                    line: i + 2,
                    message: "missing or non-integer count column".into(),
                })?;
            out.add_count(&token, count);
        }
        Ok(out)
    }

    /// Entries sorted by descending count, ties lexicographic.
    pub fn sorted_entries(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<(&str, u64)> = self.iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }
}

/// Counts a token sequence into a fresh [`TokenCounts`].
pub fn count_tokens<I, S>(tokens: I) -> TokenCounts
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = TokenCounts::new();
    for token in tokens {
        counts.add(token.as_ref());
    }
    counts
}

/// Merges two count shards; counts and totals add.
pub fn merge_counts(mut a: TokenCounts, b: TokenCounts) -> TokenCounts {
    for (token, count) in b.counts {
        *a.counts.entry(token).or_insert(0) += count;
    }
    a.total_tokens += b.total_tokens;
    a
}

/// True when any token equals `target` exactly.
pub fn match_word(tokens: &[String], target: &str) -> bool {
    tokens.iter().any(|t| t == target)
}

/// True when any token contains `target` as a substring.
pub fn match_substring(tokens: &[String], target: &str) -> bool {
    tokens.iter().any(|t| t.contains(target))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_removes_mention_emoji_url() {
        assert_eq!(
            clean_text("help the homeless @user1 \u{1F62D} https://t.co/x"),
            "help the homeless"
        );
    }

    #[test]
    fn clean_empty_is_empty() {
        assert_eq!(clean_text(""), "");
    }

    /// Fixture list covering scheme and bare-www URL forms; expectations
    /// hand-derived from the removal rules.
    #[test]
    fn clean_url_forms_fixture() {
        let cases: Vec<(String, &str)> = {
            let mut v = Vec::new();
            // 25 scheme-prefixed hosts in two phrasings = 50 URL forms.
            let hosts = [
                "t.co/abc123",
                "example.com",
                "example.com/path",
                "example.com/path?q=1",
                "example.com/path#frag",
                "sub.domain.example.org",
                "shelter.org/donate",
                "a.b",
                "bit.ly/2xYz",
                "news.site.com/story-about-homelessness",
                "EXAMPLE.COM/UPPER",
                "example.com:8080",
                "example.com/%20space",
                "xn--bcher-kva.example",
                "example.com/a,b",
                "example.com/a(b)c",
                "example.com/trailing/",
                "example.com/q?x=y&z=w",
                "example.com/~user",
                "example.com/index.html",
                "media.example.com/img.png",
                "example.com/v/1/2/3",
                "example.com/@handle",
                "example.com/#!bang",
                "example.com/..",
            ];
            for h in hosts {
                v.push((format!("homeless https://{h} shelter"), "homeless shelter"));
                v.push((format!("homeless www.{h} shelter"), "homeless shelter"));
            }
            v
        };
        assert_eq!(cases.len(), 50);
        for (input, expected) in cases {
            assert_eq!(clean_text(&input), expected, "input: {input}");
        }
        // Bare www without scheme, start/end of string.
        assert_eq!(clean_text("www.shelter.org homeless"), "homeless");
        assert_eq!(clean_text("homeless www.shelter.org"), "homeless");
    }

    #[test]
    fn camel_hashtag_two_segments_split() {
        assert_eq!(
            split_camel_hashtags("#HomelessnessFirst"),
            "homelessness first"
        );
    }

    #[test]
    fn single_case_transition_hashtag_kept_whole() {
        assert_eq!(
            split_camel_hashtags("#Homelessnessfirst"),
            "#Homelessnessfirst"
        );
    }

    /// Hand-written segmentation oracle: 30 hashtags with expected output
    /// derived by applying the uppercase-run grouping rule by hand.
    #[test]
    fn camel_hashtag_segmentation_fixtures() {
        let cases = [
            ("#ABCShelter", "abc shelter"),
            ("#HomelessnessFirst", "homelessness first"),
            ("#Homelessnessfirst", "#Homelessnessfirst"),
            ("#homeless", "#homeless"),
            ("#HOMELESS", "#HOMELESS"),
            ("#EndHomelessnessNow", "end homelessness now"),
            ("#helpTheHomeless", "help the homeless"),
            ("#HelpTheHomeless", "help the homeless"),
            ("#iLoveNY", "i love ny"),
            ("#NYCHousing", "nyc housing"),
            ("#HousingFirstCA", "housing first ca"),
            ("#housingFirst", "#housingFirst"),
            ("#Covid19Relief", "covid19 relief"),
            ("#COVID19", "#COVID19"),
            ("#covid19my", "#covid19my"),
            ("#HUDReport", "hud report"),
            ("#VAHelps", "va helps"),
            ("#AHome4All", "a home4 all"),
            ("#OneWord", "one word"),
            ("#oneword", "#oneword"),
            ("#McDonalds", "mc donalds"),
            ("#PiTCount", "pi t count"),
            ("#EndItNow", "end it now"),
            ("#SFBayArea", "sf bay area"),
            ("#AaBbCc", "aa bb cc"),
            ("#ABCDEF", "#ABCDEF"),
            ("#AbcDEF", "abc def"),
            ("#Housing2022Plan", "housing2022 plan"),
            ("#a", "#a"),
            ("#", "#"),
        ];
        for (input, expected) in cases {
            assert_eq!(split_camel_hashtags(input), expected, "input: {input}");
        }
    }

    #[test]
    fn camel_hashtag_trailing_punctuation_preserved() {
        assert_eq!(
            split_camel_hashtags("#HomelessnessFirst!"),
            "homelessness first!"
        );
    }

    #[test]
    fn non_hashtag_tokens_unchanged() {
        assert_eq!(split_camel_hashtags("CamelCase word"), "CamelCase word");
    }

    #[test]
    fn tokenize_deletes_apostrophes_and_drops_stopwords() {
        let stops = StopwordList::from_words(["the"]);
        assert_eq!(
            tokenize("The homeless man's story!", Some(&stops)),
            vec!["homeless", "mans", "story"]
        );
    }

    #[test]
    fn tokenize_all_stopwords_empty() {
        let stops = StopwordList::from_words(["the", "of"]);
        assert!(tokenize("the of THE", Some(&stops)).is_empty());
    }

    #[test]
    fn tokenize_keeps_digit_tokens() {
        assert_eq!(
            tokenize("4 homeless vets", None),
            vec!["4", "homeless", "vets"]
        );
    }

    #[test]
    fn merge_adds_counts_and_totals() {
        let mut a = TokenCounts::new();
        a.add_count("x", 1);
        let mut b = TokenCounts::new();
        b.add_count("x", 2);
        let merged = merge_counts(a, b);
        assert_eq!(merged.get("x"), 3);
        assert_eq!(merged.total_tokens(), 3);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let mut c = TokenCounts::new();
        c.add_count("homeless", 5);
        c.add_count("shelter", 2);
        assert_eq!(merge_counts(c.clone(), TokenCounts::new()), c);
        assert_eq!(merge_counts(TokenCounts::new(), c.clone()), c);
    }

    #[test]
    fn sharded_fold_equals_single_pass() {
        // 100 shards of tokens vs one pass over the concatenation.
        let shards: Vec<Vec<String>> = (0..100)
            .map(|i| {
                (0..10)
                    .map(|j| format!("tok{}", (i * 7 + j * 3) % 23))
                    .collect()
            })
            .collect();
        let folded = shards
            .iter()
            .map(|s| count_tokens(s.iter()))
            .fold(TokenCounts::new(), merge_counts);
        let concatenated: Vec<&String> = shards.iter().flatten().collect();
        assert_eq!(folded, count_tokens(concatenated));
    }

    #[test]
    fn match_predicates_differ_on_substring() {
        let tokens: Vec<String> = ["homelessness", "crisis"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert!(!match_word(&tokens, "homeless"));
        assert!(match_substring(&tokens, "homeless"));
    }

    #[test]
    fn counts_csv_sorted_desc_then_lexicographic() {
        let mut c = TokenCounts::new();
        c.add_count("b", 2);
        c.add_count("a", 2);
        c.add_count("z", 5);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "token,count\nz,5\na,2\nb,2\n");
        let back = TokenCounts::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, c);
    }
}
