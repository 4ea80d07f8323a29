//! Batch command surface for the corpus analytics pipeline.

mod config;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use signalpanel_core::ingest::StateCode;
use signalpanel_core::panel::Measure;

use config::{ConfigLayer, RunConfig};

#[derive(Parser)]
#[command(
    name = "signalpanel",
    about = "Corpus analytics over geotagged social-media records: state-year panels, \
             lexicon sentiment, correlation and changepoint statistics, rank-turbulence \
             divergence, and account summaries.",
    version
)]
struct Cli {
    /// Worker threads (0 = library default). Outputs are identical for any
    /// thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct WindowArgs {
    /// Inclusive local-date window start.
    #[arg(long, default_value = "2010-03-01")]
    window_start: NaiveDate,
    /// Inclusive local-date window end.
    #[arg(long, default_value = "2022-12-31")]
    window_end: NaiveDate,
}

#[derive(Subcommand)]
enum Command {
    /// Parse JSONL records, resolve states, and emit localized records
    /// plus ingest statistics.
    Ingest {
        #[arg(long)]
        tweets: PathBuf,
        #[arg(long)]
        polygons: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        /// Keep records that resolved to no state.
        #[arg(long)]
        include_unresolved: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Compound sentiment series grouped by month, year, or state-year.
    Sentiment {
        #[arg(long)]
        tweets: PathBuf,
        #[arg(long)]
        polygons: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long, default_value = "state_year")]
        group_by: String,
        #[arg(long, default_value_t = 4.5)]
        neutral_lo: f64,
        #[arg(long, default_value_t = 5.5)]
        neutral_hi: f64,
        /// Groups with fewer matched tokens are flagged on stderr.
        #[arg(long, default_value_t = 100)]
        min_matched: u64,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Build the joined state-year panel CSV.
    Panel {
        #[arg(long)]
        tweets: PathBuf,
        #[arg(long)]
        polygons: PathBuf,
        #[arg(long)]
        census: PathBuf,
        #[arg(long)]
        land: PathBuf,
        #[arg(long)]
        pit: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Keep 2020-2021 point-in-time rows.
        #[arg(long)]
        include_pandemic_pit: bool,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Correlate two panel measures across states in a year, or across
    /// years within a state.
    Correlate {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        x: Measure,
        #[arg(long)]
        y: Measure,
        #[arg(long, conflicts_with = "state")]
        year: Option<i32>,
        #[arg(long)]
        state: Option<StateCode>,
        #[arg(long, default_value = "spearman")]
        method: String,
    },
    /// Lagged cross-correlation of two panel measures within states.
    Crosscorr {
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        x: Measure,
        #[arg(long)]
        y: Measure,
        /// One state; omit for every state.
        #[arg(long)]
        state: Option<StateCode>,
        #[arg(long, default_value_t = 9)]
        max_lag: usize,
        /// Lag x behind y instead of y behind x.
        #[arg(long)]
        swap_direction: bool,
    },
    /// Trend changepoint of a numeric CSV column.
    Changepoint {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        value_column: String,
        /// Column labeling each period; row index is used when omitted.
        #[arg(long)]
        period_column: Option<String>,
        #[arg(long, default_value_t = 1000)]
        n_boot: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Rank-turbulence divergence between two token-count CSV files.
    Allotax {
        #[arg(long)]
        counts_a: PathBuf,
        #[arg(long)]
        counts_b: PathBuf,
        #[arg(long, default_value_t = signalpanel_core::allotax::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 50)]
        top_k: usize,
        #[arg(long, default_value_t = 16)]
        bins: usize,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Account-frequency and account-type composition summary.
    Accounts {
        #[arg(long)]
        tweets: PathBuf,
        #[arg(long)]
        polygons: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Restrict the slice to these states (comma-separated).
        #[arg(long, value_delimiter = ',')]
        states: Option<Vec<StateCode>>,
        /// Restrict the slice to these local years (comma-separated).
        #[arg(long, value_delimiter = ',')]
        years: Option<Vec<i32>>,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run the full pipeline and write every artifact.
    Report(Box<ReportArgs>),
}

#[derive(Args)]
struct ReportArgs {
    /// Optional key=value config file; flags override it, and
    /// SIGNALPANEL_* environment variables sit in between.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tweets: Option<PathBuf>,
    #[arg(long)]
    polygons: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    census: Option<PathBuf>,
    #[arg(long)]
    land: Option<PathBuf>,
    #[arg(long)]
    pit: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    window_start: Option<String>,
    #[arg(long)]
    window_end: Option<String>,
    #[arg(long)]
    neutral_lo: Option<f64>,
    #[arg(long)]
    neutral_hi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    n_boot: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    allotax_split_year: Option<i32>,
    #[arg(long)]
    target_word: Option<String>,
    #[arg(long)]
    include_pandemic_pit: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ReportArgs {
    fn flag_layer(&self) -> ConfigLayer {
        let mut layer = ConfigLayer::default();
        let mut set_path = |key: &str, value: &Option<PathBuf>| {
            if let Some(v) = value {
                layer.values.insert(key.into(), v.to_string_lossy().into_owned());
            }
        };
        set_path("tweets", &self.tweets);
        set_path("polygons", &self.polygons);
        set_path("lexicon", &self.lexicon);
        set_path("stopwords", &self.stopwords);
        set_path("census", &self.census);
        set_path("land", &self.land);
        set_path("pit", &self.pit);
        set_path("labels", &self.labels);
        set_path("out_dir", &self.out_dir);
        let mut set = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                layer.values.insert(key.into(), v);
            }
        };
        set("window_start", self.window_start.clone());
        set("window_end", self.window_end.clone());
        set("neutral_lo", self.neutral_lo.map(|v| v.to_string()));
        set("neutral_hi", self.neutral_hi.map(|v| v.to_string()));
        set("alpha", self.alpha.map(|v| v.to_string()));
        set("max_lag", self.max_lag.map(|v| v.to_string()));
        set("n_boot", self.n_boot.map(|v| v.to_string()));
        set("seed", self.seed.map(|v| v.to_string()));
        set("top_k", self.top_k.map(|v| v.to_string()));
        set("bins", self.bins.map(|v| v.to_string()));
        set(
            "allotax_split_year",
            self.allotax_split_year.map(|v| v.to_string()),
        );
        set("target_word", self.target_word.clone());
        if self.include_pandemic_pit {
            set("include_pandemic_pit", Some("true".into()));
        }
        layer
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // One global pool; every parallel stage inherits it.
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("{}", error_json(&format!("thread pool: {e}")));
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(output) => {
            println!("{output}");
            ExitCode::SUCCESS
        }
        Err(RunError::Config(problems)) => {
            let payload = serde_json::json!({
                "error": "invalid configuration",
                "problems": problems,
            });
            eprintln!("{payload}");
            ExitCode::from(2)
        }
        Err(RunError::Other(e)) => {
            eprintln!("{}", error_json(&format!("{e:#}")));
            ExitCode::from(1)
        }
    }
}

fn error_json(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

enum RunError {
    Config(Vec<String>),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Other(e)
    }
}

fn run(command: Command) -> Result<String, RunError> {
    match command {
        Command::Ingest {
            tweets,
            polygons,
            window,
            include_unresolved,
            out_dir,
        } => Ok(pipeline::cmd_ingest(&pipeline::IngestArgs {
            tweets,
            polygons,
            window_start: window.window_start,
            window_end: window.window_end,
            include_unresolved,
            out_dir,
        })?),
        Command::Sentiment {
            tweets,
            polygons,
            lexicon,
            stopwords,
            group_by,
            neutral_lo,
            neutral_hi,
            min_matched,
            window,
            out_dir,
        } => Ok(pipeline::cmd_sentiment(&pipeline::SentimentArgs {
            tweets,
            polygons,
            lexicon,
            stopwords,
            group_by,
            neutral_lo,
            neutral_hi,
            min_matched,
            window_start: window.window_start,
            window_end: window.window_end,
            out_dir,
        })?),
        Command::Panel {
            tweets,
            polygons,
            census,
            land,
            pit,
            lexicon,
            stopwords,
            include_pandemic_pit,
            window,
            out_dir,
        } => Ok(pipeline::cmd_panel(&pipeline::PanelArgs {
            tweets,
            polygons,
            census,
            land,
            pit,
            lexicon,
            stopwords,
            include_pandemic_pit,
            window_start: window.window_start,
            window_end: window.window_end,
            out_dir,
        })?),
        Command::Correlate {
            panel,
            x,
            y,
            year,
            state,
            method,
        } => Ok(cmd_correlate(&panel, x, y, year, state, &method)?),
        Command::Crosscorr {
            panel,
            x,
            y,
            state,
            max_lag,
            swap_direction,
        } => Ok(cmd_crosscorr(&panel, x, y, state, max_lag, swap_direction)?),
        Command::Changepoint {
            series,
            value_column,
            period_column,
            n_boot,
            seed,
        } => {
            let column =
                pipeline::read_series_column(&series, &value_column, period_column.as_deref())?;
            let report = pipeline::changepoint_report(&column, n_boot, seed)?;
            Ok(serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?)
        }
        Command::Allotax {
            counts_a,
            counts_b,
            alpha,
            top_k,
            bins,
            out_dir,
        } => Ok(pipeline::cmd_allotax(&pipeline::AllotaxArgs {
            counts_a,
            counts_b,
            alpha,
            top_k,
            bins,
            out_dir,
        })?),
        Command::Accounts {
            tweets,
            polygons,
            labels,
            k,
            states,
            years,
            window,
            out_dir,
        } => Ok(pipeline::cmd_accounts(&pipeline::AccountsArgs {
            tweets,
            polygons,
            labels,
            k,
            states,
            years,
            window_start: window.window_start,
            window_end: window.window_end,
            out_dir,
        })?),
        Command::Report(args) => {
            let mut layers = vec![args.flag_layer(), ConfigLayer::from_env()];
            if let Some(path) = &args.config {
                layers.push(ConfigLayer::from_file(path).map_err(|e| {
                    RunError::Config(vec![e])
                })?);
            }
            let config = RunConfig::resolve(&layers).map_err(RunError::Config)?;
            Ok(report::run_report(&config)?)
        }
    }
}

fn cmd_correlate(
    panel_path: &PathBuf,
    x: Measure,
    y: Measure,
    year: Option<i32>,
    state: Option<StateCode>,
    method: &str,
) -> Result<String> {
    let panel = load_panel_csv(panel_path)?;
    let (scope, result) = match (year, state) {
        (Some(year), None) => (
            year.to_string(),
            pipeline::correlate_year(&panel, x, y, year, method)?,
        ),
        (None, Some(state)) => (
            state.to_string(),
            pipeline::correlate_state(&panel, x, y, state, method)?,
        ),
        _ => bail!("exactly one of --year or --state is required"),
    };
    let row = pipeline::CorrelationRow::from_result(x.name(), y.name(), scope, &result);
    Ok(serde_json::to_string_pretty(&row)?)
}

fn cmd_crosscorr(
    panel_path: &PathBuf,
    x: Measure,
    y: Measure,
    state: Option<StateCode>,
    max_lag: usize,
    swap_direction: bool,
) -> Result<String> {
    let panel = load_panel_csv(panel_path)?;
    let states: Vec<StateCode> = match state {
        Some(s) => vec![s],
        None => {
            let set: std::collections::BTreeSet<_> =
                panel.cells().iter().map(|c| c.state).collect();
            set.into_iter().collect()
        }
    };
    let mut results = serde_json::Map::new();
    for s in states {
        let (years, xs, ys) = pipeline::aligned_state_series(&panel, x, y, s);
        let (lead, lag_side) = if swap_direction { (ys, xs) } else { (xs, ys) };
        match signalpanel_core::stats::cross_correlation(&lead, &lag_side, max_lag) {
            Ok(result) => {
                results.insert(
                    s.to_string(),
                    serde_json::json!({
                        "years": years,
                        "coefficients": result.coefficients,
                        "best": result.best,
                    }),
                );
            }
            Err(e) => {
                results.insert(s.to_string(), serde_json::json!({ "error": e.to_string() }));
            }
        }
    }
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(
        results,
    ))?)
}

fn load_panel_csv(path: &PathBuf) -> Result<signalpanel_core::panel::StateYearPanel> {
    let file = std::fs::File::open(path)
        .map_err(|e| anyhow::anyhow!("opening panel {}: {e}", path.display()))?;
    signalpanel_core::panel::StateYearPanel::read_csv(file)
        .map_err(|e| anyhow::anyhow!("reading panel {}: {e}", path.display()))
}
