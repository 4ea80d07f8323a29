//! State-year panel joining tweet volume, homelessness counts, census
//! population, and land area, with the derived per-capita and density
//! measures, annualized deltas, national shares, and sentiment columns.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Record, StateCode};
use crate::lexicon::SentimentResult;
use crate::ranks::{average_ranks, RankOrder};

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{source_name}: duplicate key {key}")]
    DuplicateKey { source_name: String, key: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("period {0}: target count exceeds total count")]
    InvalidLogOddsInput(String),
    #[error("measure {measure} present for fewer than 2 states in {year}")]
    NotEnoughData { measure: String, year: i32 },
}

/// Annual state population estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusRow {
    pub state: StateCode,
    pub year: i32,
    pub population: u64,
}

/// State land area in square miles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandAreaRow {
    pub state: StateCode,
    pub land_sq_miles: f64,
}

/// Point-in-time overall homeless count for a state-year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PitRow {
    pub state: StateCode,
    pub year: i32,
    pub overall_homeless: u64,
}

/// One state-year of the panel. Measures are absent whenever any of their
/// inputs is missing; they are never zero-filled. Tweet counts come from
/// the record stream itself, so a covered state-year without records is an
/// observed zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelCell {
    pub state: StateCode,
    pub year: i32,
    pub tweet_count: u64,
    pub homeless_count: Option<u64>,
    pub population: Option<u64>,
    pub land_area: Option<f64>,
    /// Homeless count per capita.
    pub hc: Option<f64>,
    /// Homeless count per square land-mile.
    pub hd: Option<f64>,
    /// General population per square land-mile.
    pub gd: Option<f64>,
    /// Tweet count per capita.
    pub ht: Option<f64>,
    pub d_hc: Option<f64>,
    pub d_hd: Option<f64>,
    pub d_ht: Option<f64>,
    pub pct_nat_tweets: Option<f64>,
    pub pct_nat_homeless: Option<f64>,
    pub sent_raw: Option<f64>,
    pub sent_rescaled: Option<f64>,
}

/// Panel measure identifiers, named as in the CSV header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    TweetCount,
    HomelessCount,
    Population,
    LandArea,
    Hc,
    Hd,
    Gd,
    Ht,
    DHc,
    DHd,
    DHt,
    PctNatTweets,
    PctNatHomeless,
    SentRaw,
    SentRescaled,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::TweetCount => "tweet_count",
            Measure::HomelessCount => "homeless_count",
            Measure::Population => "population",
            Measure::LandArea => "land_area",
            Measure::Hc => "HC",
            Measure::Hd => "HD",
            Measure::Gd => "GD",
            Measure::Ht => "HT",
            Measure::DHc => "dHC",
            Measure::DHd => "dHD",
            Measure::DHt => "dHT",
            Measure::PctNatTweets => "pct_nat_tweets",
            Measure::PctNatHomeless => "pct_nat_homeless",
            Measure::SentRaw => "sent_raw",
            Measure::SentRescaled => "sent_rescaled",
        }
    }

    pub fn value_of(&self, cell: &PanelCell) -> Option<f64> {
        match self {
            Measure::TweetCount => Some(cell.tweet_count as f64),
            Measure::HomelessCount => cell.homeless_count.map(|v| v as f64),
            Measure::Population => cell.population.map(|v| v as f64),
            Measure::LandArea => cell.land_area,
            Measure::Hc => cell.hc,
            Measure::Hd => cell.hd,
            Measure::Gd => cell.gd,
            Measure::Ht => cell.ht,
            Measure::DHc => cell.d_hc,
            Measure::DHd => cell.d_hd,
            Measure::DHt => cell.d_ht,
            Measure::PctNatTweets => cell.pct_nat_tweets,
            Measure::PctNatHomeless => cell.pct_nat_homeless,
            Measure::SentRaw => cell.sent_raw,
            Measure::SentRescaled => cell.sent_rescaled,
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tweet_count" => Ok(Measure::TweetCount),
            "homeless_count" => Ok(Measure::HomelessCount),
            "population" => Ok(Measure::Population),
            "land_area" => Ok(Measure::LandArea),
            "HC" => Ok(Measure::Hc),
            "HD" => Ok(Measure::Hd),
            "GD" => Ok(Measure::Gd),
            "HT" => Ok(Measure::Ht),
            "dHC" => Ok(Measure::DHc),
            "dHD" => Ok(Measure::DHd),
            "dHT" => Ok(Measure::DHt),
            "pct_nat_tweets" => Ok(Measure::PctNatTweets),
            "pct_nat_homeless" => Ok(Measure::PctNatHomeless),
            "sent_raw" => Ok(Measure::SentRaw),
            "sent_rescaled" => Ok(Measure::SentRescaled),
            other => Err(format!("unknown measure: {other}")),
        }
    }
}

/// The joined panel, one cell per (state, year), sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateYearPanel {
    cells: Vec<PanelCell>,
}

#[derive(Debug, Clone, Copy)]
pub struct PanelOptions {
    /// Keep 2020 and 2021 point-in-time rows instead of dropping them.
    pub include_pandemic_pit: bool,
}

impl Default for PanelOptions {
    fn default() -> Self {
        Self {
            include_pandemic_pit: false,
        }
    }
}

/// Pandemic-era point-in-time years dropped by default.
pub const EXCLUDED_PIT_YEARS: [i32; 2] = [2020, 2021];

pub fn build_panel(
    records: &[Record],
    pit: &[PitRow],
    census: &[CensusRow],
    land: &[LandAreaRow],
    sentiment: &[(String, SentimentResult)],
    options: &PanelOptions,
) -> Result<StateYearPanel, PanelError> {
    let mut tweet_counts: BTreeMap<(StateCode, i32), u64> = BTreeMap::new();
    for record in records {
        if let Some(state) = record.state {
            *tweet_counts.entry((state, record.local_year())).or_insert(0) += 1;
        }
    }

    let mut homeless: BTreeMap<(StateCode, i32), u64> = BTreeMap::new();
    for row in pit {
        if !options.include_pandemic_pit && EXCLUDED_PIT_YEARS.contains(&row.year) {
            continue;
        }
        if homeless.insert((row.state, row.year), row.overall_homeless).is_some() {
            return Err(PanelError::DuplicateKey {
                source_name: "pit".into(),
                key: format!("{}-{}", row.state, row.year),
            });
        }
    }

    let mut population: BTreeMap<(StateCode, i32), u64> = BTreeMap::new();
    for row in census {
        if population.insert((row.state, row.year), row.population).is_some() {
            return Err(PanelError::DuplicateKey {
                source_name: "census".into(),
                key: format!("{}-{}", row.state, row.year),
            });
        }
    }

    let mut land_area: BTreeMap<StateCode, f64> = BTreeMap::new();
    for row in land {
        if land_area.insert(row.state, row.land_sq_miles).is_some() {
            return Err(PanelError::DuplicateKey {
                source_name: "land".into(),
                key: row.state.to_string(),
            });
        }
    }

    let mut sent: BTreeMap<(StateCode, i32), SentimentResult> = BTreeMap::new();
    for (key, result) in sentiment {
        let Some((state_text, year_text)) = key.split_once('-') else {
            continue;
        };
        let (Some(state), Ok(year)) = (StateCode::parse(state_text), year_text.parse::<i32>())
        else {
            continue;
        };
        if sent.insert((state, year), *result).is_some() {
            return Err(PanelError::DuplicateKey {
                source_name: "sentiment".into(),
                key: key.clone(),
            });
        }
    }

    let mut keys: BTreeSet<(StateCode, i32)> = BTreeSet::new();
    keys.extend(tweet_counts.keys().copied());
    keys.extend(homeless.keys().copied());
    keys.extend(population.keys().copied());

    // National totals per year for the share columns.
    let mut national_tweets: BTreeMap<i32, u64> = BTreeMap::new();
    let mut national_homeless: BTreeMap<i32, u64> = BTreeMap::new();
    for &(state, year) in &keys {
        *national_tweets.entry(year).or_insert(0) +=
            tweet_counts.get(&(state, year)).copied().unwrap_or(0);
        if let Some(&h) = homeless.get(&(state, year)) {
            *national_homeless.entry(year).or_insert(0) += h;
        }
    }

    let hc_of = |state: StateCode, year: i32| -> Option<f64> {
        let h = homeless.get(&(state, year))?;
        let p = population.get(&(state, year))?;
        Some(*h as f64 / *p as f64)
    };
    let hd_of = |state: StateCode, year: i32| -> Option<f64> {
        let h = homeless.get(&(state, year))?;
        let a = land_area.get(&state)?;
        Some(*h as f64 / *a)
    };
    let ht_of = |state: StateCode, year: i32| -> Option<f64> {
        let t = tweet_counts.get(&(state, year)).copied().unwrap_or(0);
        let p = population.get(&(state, year))?;
        Some(t as f64 / *p as f64)
    };

    let mut cells = Vec::with_capacity(keys.len());
    for (state, year) in keys {
        let tweets = tweet_counts.get(&(state, year)).copied().unwrap_or(0);
        let pop = population.get(&(state, year)).copied();
        let area = land_area.get(&state).copied();
        let hless = homeless.get(&(state, year)).copied();
        let hc = hc_of(state, year);
        let hd = hd_of(state, year);
        let gd = match (pop, area) {
            (Some(p), Some(a)) => Some(p as f64 / a),
            _ => None,
        };
        let ht = ht_of(state, year);
        let delta = |cur: Option<f64>, prev: Option<f64>| match (cur, prev) {
            (Some(c), Some(p)) => Some(c - p),
            _ => None,
        };
        let pct_nat_tweets = national_tweets
            .get(&year)
            .filter(|&&total| total > 0)
            .map(|&total| tweets as f64 / total as f64);
        let pct_nat_homeless = match (hless, national_homeless.get(&year)) {
            (Some(h), Some(&total)) if total > 0 => Some(h as f64 / total as f64),
            _ => None,
        };
        let sentiment_cell = sent.get(&(state, year));
        cells.push(PanelCell {
            state,
            year,
            tweet_count: tweets,
            homeless_count: hless,
            population: pop,
            land_area: area,
            hc,
            hd,
            gd,
            ht,
            d_hc: delta(hc, hc_of(state, year - 1)),
            d_hd: delta(hd, hd_of(state, year - 1)),
            d_ht: delta(ht, ht_of(state, year - 1)),
            pct_nat_tweets,
            pct_nat_homeless,
            sent_raw: sentiment_cell.and_then(|s| s.raw_score),
            sent_rescaled: sentiment_cell.and_then(|s| s.rescaled),
        });
    }
    Ok(StateYearPanel { cells })
}

impl StateYearPanel {
    pub fn cells(&self) -> &[PanelCell] {
        &self.cells
    }

    pub fn get(&self, state: StateCode, year: i32) -> Option<&PanelCell> {
        self.cells
            .binary_search_by_key(&(state, year), |c| (c.state, c.year))
            .ok()
            .map(|i| &self.cells[i])
    }

    pub fn years(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.cells.iter().map(|c| c.year).collect();
        set.into_iter().collect()
    }

    /// Values of `measure` across states in one year, skipping absent cells.
    pub fn column_for_year(&self, measure: Measure, year: i32) -> Vec<(StateCode, f64)> {
        self.cells
            .iter()
            .filter(|c| c.year == year)
            .filter_map(|c| measure.value_of(c).map(|v| (c.state, v)))
            .collect()
    }

    /// Year-ordered values of `measure` for one state, absent cells kept as
    /// `None` so callers control deletion.
    pub fn series_for_state(&self, measure: Measure, state: StateCode) -> Vec<(i32, Option<f64>)> {
        self.cells
            .iter()
            .filter(|c| c.state == state)
            .map(|c| (c.year, measure.value_of(c)))
            .collect()
    }

    /// Writes the panel with the fixed column set, absent cells empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PanelError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "state",
            "year",
            "tweet_count",
            "homeless_count",
            "population",
            "land_area",
            "HC",
            "HD",
            "GD",
            "HT",
            "dHC",
            "dHD",
            "dHT",
            "pct_nat_tweets",
            "pct_nat_homeless",
            "sent_raw",
            "sent_rescaled",
        ])?;
        let fmt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        let fmt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            wtr.write_record([
                c.state.to_string(),
                c.year.to_string(),
                c.tweet_count.to_string(),
                fmt_u(c.homeless_count),
                fmt_u(c.population),
                fmt_f(c.land_area),
                fmt_f(c.hc),
                fmt_f(c.hd),
                fmt_f(c.gd),
                fmt_f(c.ht),
                fmt_f(c.d_hc),
                fmt_f(c.d_hd),
                fmt_f(c.d_ht),
                fmt_f(c.pct_nat_tweets),
                fmt_f(c.pct_nat_homeless),
                fmt_f(c.sent_raw),
                fmt_f(c.sent_rescaled),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, PanelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut cells = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let field = |idx: usize| -> &str { row.get(idx).unwrap_or("") };
            let opt_u = |idx: usize| -> Option<u64> { field(idx).parse().ok() };
            let opt_f = |idx: usize| -> Option<f64> { field(idx).parse().ok() };
            let state = StateCode::parse(field(0)).ok_or(PanelError::Format {
                line,
                message: format!("bad state: {}", field(0)),
            })?;
            let year: i32 = field(1).parse().map_err(|_| PanelError::Format {
                line,
                message: format!("bad year: {}", field(1)),
            })?;
            let tweet_count: u64 = field(2).parse().map_err(|_| PanelError::Format {
                line,
                message: format!("bad tweet_count: {}", field(2)),
            })?;
            cells.push(PanelCell {
                state,
                year,
                tweet_count,
                homeless_count: opt_u(3),
                population: opt_u(4),
                land_area: opt_f(5),
                hc: opt_f(6),
                hd: opt_f(7),
                gd: opt_f(8),
                ht: opt_f(9),
                d_hc: opt_f(10),
                d_hd: opt_f(11),
                d_ht: opt_f(12),
                pct_nat_tweets: opt_f(13),
                pct_nat_homeless: opt_f(14),
                sent_raw: opt_f(15),
                sent_rescaled: opt_f(16),
            });
        }
        cells.sort_by_key(|c| (c.state, c.year));
        Ok(Self { cells })
    }
}

/// One state ranked within a year, rank 1 = largest value, ties averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedState {
    pub state: StateCode,
    pub value: f64,
    pub rank: f64,
}

/// Ranks states on `measure` within `year`, descending by value with
/// average ranks for ties. States missing the measure are skipped.
pub fn rank_states(
    panel: &StateYearPanel,
    measure: Measure,
    year: i32,
) -> Result<Vec<RankedState>, PanelError> {
    let column = panel.column_for_year(measure, year);
    if column.len() < 2 {
        return Err(PanelError::NotEnoughData {
            measure: measure.name().into(),
            year,
        });
    }
    let values: Vec<f64> = column.iter().map(|(_, v)| *v).collect();
    let ranks = average_ranks(&values, RankOrder::Descending);
    let mut out: Vec<RankedState> = column
        .iter()
        .zip(ranks)
        .map(|(&(state, value), rank)| RankedState { state, value, rank })
        .collect();
    out.sort_by(|a, b| {
        a.rank
            .partial_cmp(&b.rank)
            .unwrap()
            .then_with(|| a.state.cmp(&b.state))
    });
    Ok(out)
}

/// One period of a log-odds series; `ratio` and `log10_ratio` are absent
/// exactly when the target count was zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogOddsPoint {
    pub period: String,
    pub ratio: Option<f64>,
    pub log10_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogOddsSeries {
    pub points: Vec<LogOddsPoint>,
    /// Periods dropped because their total count was zero.
    pub skipped: Vec<String>,
}

/// Base-10 log of target-count over total-count per period. Zero targets
/// yield a present period with absent values; zero totals skip the period.
pub fn log_odds<I>(counts_by_period: I) -> Result<LogOddsSeries, PanelError>
where
    I: IntoIterator<Item = (String, u64, u64)>,
{
    let mut series = LogOddsSeries::default();
    for (period, target, total) in counts_by_period {
        if total == 0 {
            series.skipped.push(period);
            continue;
        }
        if target > total {
            return Err(PanelError::InvalidLogOddsInput(period));
        }
        if target == 0 {
            series.points.push(LogOddsPoint {
                period,
                ratio: None,
                log10_ratio: None,
            });
            continue;
        }
        let ratio = target as f64 / total as f64;
        series.points.push(LogOddsPoint {
            period,
            ratio: Some(ratio),
            log10_ratio: Some(ratio.log10()),
        });
    }
    Ok(series)
}

pub fn write_log_odds_csv<W: Write>(series: &LogOddsSeries, writer: W) -> Result<(), PanelError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["period", "ratio", "log10_ratio"])?;
    for p in &series.points {
        wtr.write_record([
            p.period.clone(),
            p.ratio.map(|v| v.to_string()).unwrap_or_default(),
            p.log10_ratio.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Sums Continuum-of-Care level counts (`coc_id,state,year,overall_homeless`)
/// into state-level point-in-time rows.
pub fn aggregate_coc_rows<I>(rows: I) -> Vec<PitRow>
where
    I: IntoIterator<Item = (String, StateCode, i32, u64)>,
{
    let mut sums: BTreeMap<(StateCode, i32), u64> = BTreeMap::new();
    for (_coc, state, year, count) in rows {
        *sums.entry((state, year)).or_insert(0) += count;
    }
    sums.into_iter()
        .map(|((state, year), overall_homeless)| PitRow {
            state,
            year,
            overall_homeless,
        })
        .collect()
}

// ---------- CSV loaders for the three input files ----------

pub fn read_census_csv<R: Read>(reader: R) -> Result<Vec<CensusRow>, PanelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let state = StateCode::parse(row.get(0).unwrap_or("")).ok_or(PanelError::Format {
            line,
            message: "bad state code".into(),
        })?;
        let year: i32 = parse_field(&row, 1, line, "year")?;
        let population: u64 = parse_field(&row, 2, line, "population")?;
        if population == 0 {
            return Err(PanelError::Format {
                line,
                message: "population must be positive".into(),
            });
        }
        out.push(CensusRow {
            state,
            year,
            population,
        });
    }
    Ok(out)
}

pub fn read_land_csv<R: Read>(reader: R) -> Result<Vec<LandAreaRow>, PanelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let state = StateCode::parse(row.get(0).unwrap_or("")).ok_or(PanelError::Format {
            line,
            message: "bad state code".into(),
        })?;
        let land_sq_miles: f64 = parse_field(&row, 1, line, "land_sq_miles")?;
        if land_sq_miles <= 0.0 {
            return Err(PanelError::Format {
                line,
                message: "land area must be positive".into(),
            });
        }
        out.push(LandAreaRow {
            state,
            land_sq_miles,
        });
    }
    Ok(out)
}

pub fn read_pit_csv<R: Read>(reader: R) -> Result<Vec<PitRow>, PanelError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let state = StateCode::parse(row.get(0).unwrap_or("")).ok_or(PanelError::Format {
            line,
            message: "bad state code".into(),
        })?;
        let year: i32 = parse_field(&row, 1, line, "year")?;
        let overall_homeless: u64 = parse_field(&row, 2, line, "overall_homeless")?;
        out.push(PitRow {
            state,
            year,
            overall_homeless,
        });
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    line: usize,
    name: &str,
) -> Result<T, PanelError> {
    row.get(idx)
        .and_then(|v| v.trim().parse().ok())
        .ok_or(PanelError::Format {
            line,
            message: format!("bad {name}"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(code: &str) -> StateCode {
        StateCode::parse(code).unwrap()
    }

    fn census_fixture() -> Vec<CensusRow> {
        vec![
            CensusRow { state: state("CA"), year: 2018, population: 39_557_045 },
            CensusRow { state: state("CA"), year: 2019, population: 39_512_223 },
            CensusRow { state: state("MA"), year: 2018, population: 6_882_635 },
            CensusRow { state: state("MA"), year: 2019, population: 6_892_503 },
        ]
    }

    fn land_fixture() -> Vec<LandAreaRow> {
        vec![
            LandAreaRow { state: state("CA"), land_sq_miles: 155_779.22 },
            LandAreaRow { state: state("MA"), land_sq_miles: 7_800.06 },
        ]
    }

    fn pit_fixture() -> Vec<PitRow> {
        vec![
            PitRow { state: state("CA"), year: 2018, overall_homeless: 129_972 },
            PitRow { state: state("CA"), year: 2019, overall_homeless: 151_278 },
            PitRow { state: state("MA"), year: 2018, overall_homeless: 20_068 },
            PitRow { state: state("MA"), year: 2019, overall_homeless: 18_471 },
        ]
    }

    fn build_fixture_panel() -> StateYearPanel {
        build_panel(
            &[],
            &pit_fixture(),
            &census_fixture(),
            &land_fixture(),
            &[],
            &PanelOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn california_2019_deltas() {
        // Published 2018->2019 increase of 21,306 translates to roughly
        // 0.00054 per capita and 0.137 per square mile.
        let panel = build_fixture_panel();
        let ca = panel.get(state("CA"), 2019).unwrap();
        let d_hc = ca.d_hc.unwrap();
        let d_hd = ca.d_hd.unwrap();
        assert!((d_hc - 0.00054).abs() / 0.00054 < 0.05, "dHC = {d_hc}");
        assert!((d_hd - 0.137).abs() / 0.137 < 0.05, "dHD = {d_hd}");
    }

    #[test]
    fn massachusetts_2019_deltas() {
        let panel = build_fixture_panel();
        let ma = panel.get(state("MA"), 2019).unwrap();
        let d_hc = ma.d_hc.unwrap();
        let d_hd = ma.d_hd.unwrap();
        assert!(d_hc < 0.0 && d_hd < 0.0);
        assert!((d_hc.abs() - 0.00024).abs() / 0.00024 < 0.05, "dHC = {d_hc}");
        assert!((d_hd.abs() - 0.20).abs() / 0.20 < 0.05, "dHD = {d_hd}");
    }

    #[test]
    fn zero_tweet_state_year_has_ht_zero_and_absent_sentiment() {
        let panel = build_fixture_panel();
        let cell = panel.get(state("CA"), 2019).unwrap();
        assert_eq!(cell.tweet_count, 0);
        assert_eq!(cell.ht, Some(0.0));
        assert_eq!(cell.sent_raw, None);
    }

    #[test]
    fn delta_absent_when_previous_year_missing() {
        let panel = build_fixture_panel();
        let cell = panel.get(state("CA"), 2018).unwrap();
        assert_eq!(cell.d_hc, None);
        assert_eq!(cell.d_hd, None);
    }

    #[test]
    fn delta_is_exact_difference() {
        let panel = build_fixture_panel();
        let y19 = panel.get(state("CA"), 2019).unwrap();
        let y18 = panel.get(state("CA"), 2018).unwrap();
        assert_eq!(y19.d_hc.unwrap(), y19.hc.unwrap() - y18.hc.unwrap());
    }

    #[test]
    fn pandemic_pit_rows_excluded_by_default() {
        let mut pit = pit_fixture();
        pit.push(PitRow { state: state("CA"), year: 2020, overall_homeless: 161_548 });
        let panel = build_panel(
            &[],
            &pit,
            &census_fixture(),
            &land_fixture(),
            &[],
            &PanelOptions::default(),
        )
        .unwrap();
        assert!(panel.get(state("CA"), 2020).is_none());
        let included = build_panel(
            &[],
            &pit,
            &census_fixture(),
            &land_fixture(),
            &[],
            &PanelOptions { include_pandemic_pit: true },
        )
        .unwrap();
        assert_eq!(
            included.get(state("CA"), 2020).unwrap().homeless_count,
            Some(161_548)
        );
    }

    #[test]
    fn duplicate_key_is_named() {
        let mut pit = pit_fixture();
        pit.push(pit_fixture()[0]);
        let err = build_panel(
            &[],
            &pit,
            &census_fixture(),
            &land_fixture(),
            &[],
            &PanelOptions::default(),
        )
        .unwrap_err();
        match err {
            PanelError::DuplicateKey { source_name, key } => {
                assert_eq!(source_name, "pit");
                assert_eq!(key, "CA-2018");
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn pct_national_sums_to_one() {
        let panel = build_fixture_panel();
        for year in panel.years() {
            let sum: f64 = panel
                .cells()
                .iter()
                .filter(|c| c.year == year)
                .filter_map(|c| c.pct_nat_homeless)
                .sum();
            assert!((sum - 1.0).abs() < 1e-9, "year {year}: {sum}");
        }
    }

    #[test]
    fn log_odds_identities() {
        let series = log_odds([("m1".to_string(), 1, 100_000)]).unwrap();
        assert_eq!(series.points[0].ratio, Some(1e-5));
        assert!((series.points[0].log10_ratio.unwrap() + 5.0).abs() < 1e-12);

        let zero_target = log_odds([("m1".to_string(), 0, 100)]).unwrap();
        assert_eq!(zero_target.points[0].ratio, None);
        assert_eq!(zero_target.points[0].log10_ratio, None);

        let zero_total = log_odds([("m1".to_string(), 0, 0)]).unwrap();
        assert!(zero_total.points.is_empty());
        assert_eq!(zero_total.skipped, vec!["m1".to_string()]);

        assert!(log_odds([("m1".to_string(), 5, 4)]).is_err());
    }

    #[test]
    fn log_odds_monotone_in_ratio() {
        let series = log_odds([
            ("a".to_string(), 1, 1000),
            ("b".to_string(), 2, 1000),
            ("c".to_string(), 5, 1000),
        ])
        .unwrap();
        let logs: Vec<f64> = series
            .points
            .iter()
            .map(|p| p.log10_ratio.unwrap())
            .collect();
        assert!(logs[0] < logs[1] && logs[1] < logs[2]);
    }

    #[test]
    fn rank_states_conventions() {
        // values 3,1,2 -> ranks 1,3,2 ; values 2,2,1 -> ranks 1.5,1.5,3
        let census = vec![
            CensusRow { state: state("CA"), year: 2019, population: 100 },
            CensusRow { state: state("MA"), year: 2019, population: 100 },
            CensusRow { state: state("VT"), year: 2019, population: 100 },
        ];
        let pit = vec![
            PitRow { state: state("CA"), year: 2019, overall_homeless: 3 },
            PitRow { state: state("MA"), year: 2019, overall_homeless: 1 },
            PitRow { state: state("VT"), year: 2019, overall_homeless: 2 },
        ];
        let panel =
            build_panel(&[], &pit, &census, &[], &[], &PanelOptions::default()).unwrap();
        let ranked = rank_states(&panel, Measure::HomelessCount, 2019).unwrap();
        let by_state: BTreeMap<&str, f64> = ranked
            .iter()
            .map(|r| (r.state.as_str(), r.rank))
            .collect();
        assert_eq!(by_state["CA"], 1.0);
        assert_eq!(by_state["MA"], 3.0);
        assert_eq!(by_state["VT"], 2.0);

        let pit_tied = vec![
            PitRow { state: state("CA"), year: 2019, overall_homeless: 2 },
            PitRow { state: state("MA"), year: 2019, overall_homeless: 2 },
            PitRow { state: state("VT"), year: 2019, overall_homeless: 1 },
        ];
        let panel =
            build_panel(&[], &pit_tied, &census, &[], &[], &PanelOptions::default()).unwrap();
        let ranked = rank_states(&panel, Measure::HomelessCount, 2019).unwrap();
        let by_state: BTreeMap<&str, f64> = ranked
            .iter()
            .map(|r| (r.state.as_str(), r.rank))
            .collect();
        assert_eq!(by_state["CA"], 1.5);
        assert_eq!(by_state["MA"], 1.5);
        assert_eq!(by_state["VT"], 3.0);
    }

    #[test]
    fn rank_states_requires_two_states() {
        let census = vec![CensusRow { state: state("CA"), year: 2019, population: 100 }];
        let panel =
            build_panel(&[], &[], &census, &[], &[], &PanelOptions::default()).unwrap();
        assert!(rank_states(&panel, Measure::Population, 2019).is_err());
    }

    #[test]
    fn rank_states_input_order_invariant() {
        let census = census_fixture();
        let mut reversed = census.clone();
        reversed.reverse();
        let a = build_panel(&[], &pit_fixture(), &census, &land_fixture(), &[], &PanelOptions::default()).unwrap();
        let b = build_panel(&[], &pit_fixture(), &reversed, &land_fixture(), &[], &PanelOptions::default()).unwrap();
        assert_eq!(
            rank_states(&a, Measure::Hd, 2019).unwrap(),
            rank_states(&b, Measure::Hd, 2019).unwrap()
        );
    }

    #[test]
    fn csv_round_trip() {
        let panel = build_fixture_panel();
        let mut buf = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        let back = StateYearPanel::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, panel);
    }

    #[test]
    fn coc_rows_sum_within_state_year() {
        let rows = vec![
            ("CA-500".to_string(), state("CA"), 2019, 100),
            ("CA-501".to_string(), state("CA"), 2019, 50),
            ("MA-500".to_string(), state("MA"), 2019, 7),
        ];
        let pit = aggregate_coc_rows(rows);
        assert_eq!(
            pit,
            vec![
                PitRow { state: state("CA"), year: 2019, overall_homeless: 150 },
                PitRow { state: state("MA"), year: 2019, overall_homeless: 7 },
            ]
        );
    }
}
