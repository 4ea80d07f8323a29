//! Shared loading and per-command implementations.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;

use signalpanel_core::accounts::{summarize, AccountLabels};
use signalpanel_core::allotax::{allotaxonograph_cells, rtd, word_shift, write_report_csv};
use signalpanel_core::ingest::{
    ingest_reader, IngestStats, Record, ScopeFilter, StateCode, StatePolygonSet,
};
use signalpanel_core::lexicon::{
    load_lexicon_file, sentiment_series, write_series_csv, GroupKey, Lexicon,
};
use signalpanel_core::panel::{
    build_panel, read_census_csv, read_land_csv, read_pit_csv, Measure, PanelOptions,
    StateYearPanel,
};
use signalpanel_core::stats::{
    changepoint, pairwise_complete, pearson, spearman, CorrelationResult,
};
use signalpanel_core::textprep::{merge_counts, prepare_tokens, StopwordList, TokenCounts};

pub fn load_polygons(path: &Path) -> Result<StatePolygonSet> {
    StatePolygonSet::load(path)
        .with_context(|| format!("loading state polygons from {}", path.display()))
}

pub fn load_stopwords(path: Option<&PathBuf>) -> Result<Option<StopwordList>> {
    match path {
        Some(p) => Ok(Some(
            StopwordList::load(p).with_context(|| format!("loading stopwords {}", p.display()))?,
        )),
        None => Ok(None),
    }
}

pub fn ingest_file(
    tweets: &Path,
    polygons: &StatePolygonSet,
    scope: &ScopeFilter,
) -> Result<(Vec<Record>, IngestStats)> {
    let file = fs::File::open(tweets)
        .with_context(|| format!("opening tweets file {}", tweets.display()))?;
    ingest_reader(BufReader::new(file), polygons, scope).context("reading tweets")
}

pub fn scope_for_window(start: NaiveDate, end: NaiveDate) -> ScopeFilter {
    ScopeFilter {
        states: None,
        include_unresolved: false,
        window: Some((start, end)),
    }
}

pub fn write_records_jsonl(records: &[Record], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Merged token counts of the records, run through the full text pipeline.
pub fn corpus_counts(records: &[Record], stopwords: Option<&StopwordList>) -> TokenCounts {
    records
        .iter()
        .map(|r| {
            let mut counts = TokenCounts::new();
            for token in prepare_tokens(&r.raw.text, stopwords) {
                counts.add(&token);
            }
            counts
        })
        .fold(TokenCounts::new(), merge_counts)
}

/// Per-month (target, total) token counts for the log-odds series. All
/// 1-grams count toward the totals, so no stopword removal here; the
/// target is a substring match.
pub fn monthly_target_counts(records: &[Record], target: &str) -> Vec<(String, u64, u64)> {
    let mut by_month: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for record in records {
        let tokens = prepare_tokens(&record.raw.text, None);
        let entry = by_month.entry(record.local_month_key()).or_insert((0, 0));
        entry.1 += tokens.len() as u64;
        entry.0 += tokens.iter().filter(|t| t.contains(target)).count() as u64;
    }
    by_month
        .into_iter()
        .map(|(month, (target_count, total))| (month, target_count, total))
        .collect()
}

pub struct PanelInputs {
    pub census: Vec<signalpanel_core::panel::CensusRow>,
    pub land: Vec<signalpanel_core::panel::LandAreaRow>,
    pub pit: Vec<signalpanel_core::panel::PitRow>,
}

pub fn load_panel_inputs(census: &Path, land: &Path, pit: &Path) -> Result<PanelInputs> {
    Ok(PanelInputs {
        census: read_census_csv(fs::File::open(census)?)
            .with_context(|| format!("reading census {}", census.display()))?,
        land: read_land_csv(fs::File::open(land)?)
            .with_context(|| format!("reading land areas {}", land.display()))?,
        pit: read_pit_csv(fs::File::open(pit)?)
            .with_context(|| format!("reading point-in-time counts {}", pit.display()))?,
    })
}

pub fn build_full_panel(
    records: &[Record],
    inputs: &PanelInputs,
    lexicon: &Lexicon,
    stopwords: Option<&StopwordList>,
    neutral_band: (f64, f64),
    include_pandemic_pit: bool,
) -> Result<StateYearPanel> {
    let sentiment = sentiment_series(records, lexicon, GroupKey::StateYear, stopwords, neutral_band);
    build_panel(
        records,
        &inputs.pit,
        &inputs.census,
        &inputs.land,
        &sentiment,
        &PanelOptions {
            include_pandemic_pit,
        },
    )
    .context("building state-year panel")
}

/// A correlation row as emitted into `correlations.csv`.
#[derive(Debug, serde::Serialize)]
pub struct CorrelationRow {
    pub measure_x: String,
    pub measure_y: String,
    pub scope: String,
    pub coefficient: f64,
    pub p: f64,
    pub n: usize,
    pub method: String,
}

impl CorrelationRow {
    pub fn from_result(
        measure_x: &str,
        measure_y: &str,
        scope: String,
        result: &CorrelationResult,
    ) -> Self {
        CorrelationRow {
            measure_x: measure_x.to_string(),
            measure_y: measure_y.to_string(),
            scope,
            coefficient: result.coefficient,
            p: result.p_value,
            n: result.n,
            method: match result.method {
                signalpanel_core::stats::CorrelationMethod::Spearman => "spearman".into(),
                signalpanel_core::stats::CorrelationMethod::Pearson => "pearson".into(),
            },
        }
    }
}

/// Cross-state correlation of two panel measures within one year, with
/// pairwise deletion of states missing either side.
pub fn correlate_year(
    panel: &StateYearPanel,
    x: Measure,
    y: Measure,
    year: i32,
    method: &str,
) -> Result<CorrelationResult> {
    let states: Vec<StateCode> = panel
        .cells()
        .iter()
        .filter(|c| c.year == year)
        .map(|c| c.state)
        .collect();
    let xs: Vec<Option<f64>> = states
        .iter()
        .map(|&s| panel.get(s, year).and_then(|c| x.value_of(c)))
        .collect();
    let ys: Vec<Option<f64>> = states
        .iter()
        .map(|&s| panel.get(s, year).and_then(|c| y.value_of(c)))
        .collect();
    let (cx, cy) = pairwise_complete(&xs, &ys);
    run_method(&cx, &cy, method)
}

/// Within-state correlation of two panel measures across years, pairwise
/// deleted.
pub fn correlate_state(
    panel: &StateYearPanel,
    x: Measure,
    y: Measure,
    state: StateCode,
    method: &str,
) -> Result<CorrelationResult> {
    let xs: Vec<Option<f64>> = panel
        .series_for_state(x, state)
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let ys: Vec<Option<f64>> = panel
        .series_for_state(y, state)
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let (cx, cy) = pairwise_complete(&xs, &ys);
    run_method(&cx, &cy, method)
}

fn run_method(x: &[f64], y: &[f64], method: &str) -> Result<CorrelationResult> {
    let result = match method {
        "spearman" => spearman(x, y),
        "pearson" => pearson(x, y),
        other => bail!("unknown method: {other} (expected spearman or pearson)"),
    };
    result.map_err(|e| anyhow::anyhow!("{e}"))
}

/// Year-aligned series of two measures for one state: only years where both
/// sides are present, in year order.
pub fn aligned_state_series(
    panel: &StateYearPanel,
    x: Measure,
    y: Measure,
    state: StateCode,
) -> (Vec<i32>, Vec<f64>, Vec<f64>) {
    let xs = panel.series_for_state(x, state);
    let ys = panel.series_for_state(y, state);
    let y_by_year: BTreeMap<i32, f64> = ys
        .into_iter()
        .filter_map(|(year, v)| v.map(|v| (year, v)))
        .collect();
    let mut years = Vec::new();
    let mut out_x = Vec::new();
    let mut out_y = Vec::new();
    for (year, v) in xs {
        if let (Some(vx), Some(&vy)) = (v, y_by_year.get(&year)) {
            years.push(year);
            out_x.push(vx);
            out_y.push(vy);
        }
    }
    (years, out_x, out_y)
}

pub struct SeriesColumn {
    pub periods: Vec<String>,
    pub values: Vec<f64>,
}

/// Reads one numeric column from a CSV, skipping rows with empty cells;
/// the optional period column labels each retained row.
pub fn read_series_column(
    path: &Path,
    value_column: &str,
    period_column: Option<&str>,
) -> Result<SeriesColumn> {
    let mut rdr = csv::Reader::from_reader(fs::File::open(path)?);
    let headers = rdr.headers()?.clone();
    let value_idx = headers
        .iter()
        .position(|h| h == value_column)
        .with_context(|| format!("column {value_column:?} not found in {}", path.display()))?;
    let period_idx = match period_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .with_context(|| format!("column {name:?} not found in {}", path.display()))?,
        ),
        None => None,
    };
    let mut periods = Vec::new();
    let mut values = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let cell = row.get(value_idx).unwrap_or("");
        if cell.is_empty() {
            continue;
        }
        let value: f64 = cell
            .parse()
            .with_context(|| format!("row {}: bad number {cell:?}", i + 2))?;
        values.push(value);
        periods.push(match period_idx {
            Some(idx) => row.get(idx).unwrap_or("").to_string(),
            None => i.to_string(),
        });
    }
    Ok(SeriesColumn { periods, values })
}

/// Changepoint JSON with both the index and its resolved calendar period
/// (index 0 is the first retained row of the series).
#[derive(Debug, serde::Serialize)]
pub struct ChangepointReport {
    pub candidate_index: usize,
    pub candidate_period: String,
    pub probability: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub sse_improvement: f64,
    pub low_confidence: bool,
    pub n_boot: usize,
    pub seed: u64,
    pub series_len: usize,
}

pub fn changepoint_report(
    series: &SeriesColumn,
    n_boot: usize,
    seed: u64,
) -> Result<ChangepointReport> {
    let result = changepoint(&series.values, n_boot, seed).map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(ChangepointReport {
        candidate_index: result.candidate_index,
        candidate_period: series.periods[result.candidate_index].clone(),
        probability: result.probability,
        left_slope: result.left_slope,
        right_slope: result.right_slope,
        sse_improvement: result.sse_improvement,
        low_confidence: result.low_confidence,
        n_boot,
        seed,
        series_len: series.values.len(),
    })
}

// ---------- Individual commands ----------

pub struct IngestArgs {
    pub tweets: PathBuf,
    pub polygons: PathBuf,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub include_unresolved: bool,
    pub out_dir: PathBuf,
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<String> {
    let polygons = load_polygons(&args.polygons)?;
    let mut scope = scope_for_window(args.window_start, args.window_end);
    scope.include_unresolved = args.include_unresolved;
    let (records, stats) = ingest_file(&args.tweets, &polygons, &scope)?;
    fs::create_dir_all(&args.out_dir)?;
    write_records_jsonl(&records, &args.out_dir.join("records.jsonl"))?;
    write_json(&stats, &args.out_dir.join("ingest_stats.json"))?;
    Ok(serde_json::to_string_pretty(&stats)?)
}

pub struct SentimentArgs {
    pub tweets: PathBuf,
    pub polygons: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub group_by: String,
    pub neutral_lo: f64,
    pub neutral_hi: f64,
    pub min_matched: u64,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub out_dir: PathBuf,
}

pub fn cmd_sentiment(args: &SentimentArgs) -> Result<String> {
    let polygons = load_polygons(&args.polygons)?;
    let lexicon = load_lexicon_file(&args.lexicon).context("loading lexicon")?;
    let stopwords = load_stopwords(args.stopwords.as_ref())?;
    let group = match args.group_by.as_str() {
        "month" => GroupKey::Month,
        "year" => GroupKey::Year,
        "state_year" => GroupKey::StateYear,
        other => bail!("unknown group key: {other} (expected month, year, or state_year)"),
    };
    let scope = scope_for_window(args.window_start, args.window_end);
    let (records, _) = ingest_file(&args.tweets, &polygons, &scope)?;
    let series = sentiment_series(
        &records,
        &lexicon,
        group,
        stopwords.as_ref(),
        (args.neutral_lo, args.neutral_hi),
    );
    fs::create_dir_all(&args.out_dir)?;
    let path = args.out_dir.join(format!("sentiment_{}.csv", args.group_by));
    let mut buf = Vec::new();
    write_series_csv(&series, &mut buf)?;
    fs::write(&path, buf)?;
    let low: Vec<&str> = series
        .iter()
        .filter(|(_, r)| r.is_low_sample(args.min_matched))
        .map(|(k, _)| k.as_str())
        .collect();
    if !low.is_empty() {
        eprintln!(
            "warning: {} group(s) below {} matched tokens: {}",
            low.len(),
            args.min_matched,
            low.join(", ")
        );
    }
    Ok(format!(
        "wrote {} groups to {}",
        series.len(),
        path.display()
    ))
}

pub struct PanelArgs {
    pub tweets: PathBuf,
    pub polygons: PathBuf,
    pub census: PathBuf,
    pub land: PathBuf,
    pub pit: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub include_pandemic_pit: bool,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub out_dir: PathBuf,
}

pub fn cmd_panel(args: &PanelArgs) -> Result<String> {
    let polygons = load_polygons(&args.polygons)?;
    let lexicon = load_lexicon_file(&args.lexicon).context("loading lexicon")?;
    let stopwords = load_stopwords(args.stopwords.as_ref())?;
    let inputs = load_panel_inputs(&args.census, &args.land, &args.pit)?;
    let scope = scope_for_window(args.window_start, args.window_end);
    let (records, _) = ingest_file(&args.tweets, &polygons, &scope)?;
    let panel = build_full_panel(
        &records,
        &inputs,
        &lexicon,
        stopwords.as_ref(),
        (4.5, 5.5),
        args.include_pandemic_pit,
    )?;
    fs::create_dir_all(&args.out_dir)?;
    let path = args.out_dir.join("panel.csv");
    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    fs::write(&path, buf)?;
    Ok(format!(
        "wrote {} state-year rows to {}",
        panel.cells().len(),
        path.display()
    ))
}

pub struct AccountsArgs {
    pub tweets: PathBuf,
    pub polygons: PathBuf,
    pub labels: PathBuf,
    pub k: usize,
    pub states: Option<Vec<StateCode>>,
    pub years: Option<Vec<i32>>,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub out_dir: PathBuf,
}

pub fn cmd_accounts(args: &AccountsArgs) -> Result<String> {
    let polygons = load_polygons(&args.polygons)?;
    let labels = AccountLabels::load(&args.labels).context("loading account labels")?;
    let mut scope = scope_for_window(args.window_start, args.window_end);
    scope.states = args.states.clone();
    let (records, _) = ingest_file(&args.tweets, &polygons, &scope)?;
    let slice: Vec<&Record> = records
        .iter()
        .filter(|r| match &args.years {
            Some(years) => years.contains(&r.local_year()),
            None => true,
        })
        .collect();
    let summary = summarize(
        slice.iter().map(|r| r.raw.author_id.as_str()),
        &labels,
        args.k,
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    fs::create_dir_all(&args.out_dir)?;
    write_json(&summary, &args.out_dir.join("accounts_summary.json"))?;
    Ok(serde_json::to_string_pretty(&summary)?)
}

pub struct AllotaxArgs {
    pub counts_a: PathBuf,
    pub counts_b: PathBuf,
    pub alpha: f64,
    pub top_k: usize,
    pub bins: usize,
    pub out_dir: PathBuf,
}

pub fn cmd_allotax(args: &AllotaxArgs) -> Result<String> {
    let a = TokenCounts::read_csv(fs::File::open(&args.counts_a)?)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.counts_a.display()))?;
    let b = TokenCounts::read_csv(fs::File::open(&args.counts_b)?)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.counts_b.display()))?;
    let report = rtd(&a, &b, args.alpha).map_err(|e| anyhow::anyhow!("{e}"))?;
    let cells =
        allotaxonograph_cells(&a, &b, args.bins).map_err(|e| anyhow::anyhow!("{e}"))?;
    fs::create_dir_all(&args.out_dir)?;
    let mut buf = Vec::new();
    write_report_csv(&report, &mut buf)?;
    fs::write(args.out_dir.join("rtd_report.csv"), buf)?;
    write_wordshift_csv(&report, args.top_k, &args.out_dir.join("wordshift.csv"))?;
    write_json(&cells, &args.out_dir.join("allotax_cells.json"))?;
    Ok(format!(
        "{{\"alpha\":{},\"total\":{}}}",
        report.alpha, report.total
    ))
}

pub fn write_wordshift_csv(
    report: &signalpanel_core::allotax::DivergenceReport,
    top_k: usize,
    path: &Path,
) -> Result<()> {
    let shift = word_shift(report, top_k);
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["rank", "token", "contribution", "side"])?;
    for (i, entry) in shift.iter().enumerate() {
        wtr.write_record([
            (i + 1).to_string(),
            entry.token.clone(),
            entry.contribution.to_string(),
            entry.side.as_str().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
