//! The `report` command: the whole pipeline over one input bundle, written
//! as a deterministic directory of CSV/JSON artifacts plus plot-ready data.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use signalpanel_core::accounts::{summarize, AccountLabels};
use signalpanel_core::allotax::{allotaxonograph_cells, rtd, write_report_csv};
use signalpanel_core::ingest::Record;
use signalpanel_core::lexicon::{
    load_lexicon_file, sentiment_series, write_series_csv, GroupKey,
};
use signalpanel_core::panel::{log_odds, write_log_odds_csv, Measure, StateYearPanel};
use signalpanel_core::stats::StatsError;
use signalpanel_core::textprep::TokenCounts;

use crate::config::RunConfig;
use crate::pipeline::{
    aligned_state_series, build_full_panel, changepoint_report, corpus_counts, correlate_state,
    correlate_year, ingest_file, load_panel_inputs, load_polygons, load_stopwords,
    monthly_target_counts, scope_for_window, write_json, write_records_jsonl,
    write_wordshift_csv, CorrelationRow, SeriesColumn,
};

pub fn run_report(config: &RunConfig) -> Result<String> {
    let out = &config.out_dir;
    fs::create_dir_all(out)?;
    fs::create_dir_all(out.join("plots"))?;

    let polygons = load_polygons(&config.polygons)?;
    let lexicon = load_lexicon_file(&config.lexicon).context("loading lexicon")?;
    let stopwords = load_stopwords(config.stopwords.as_ref())?;
    let labels = AccountLabels::load(&config.labels).context("loading account labels")?;
    let inputs = load_panel_inputs(&config.census, &config.land, &config.pit)?;
    let neutral_band = (config.neutral_lo, config.neutral_hi);

    // Ingest.
    let scope = scope_for_window(config.window_start, config.window_end);
    let (records, stats) = ingest_file(&config.tweets, &polygons, &scope)?;
    write_records_jsonl(&records, &out.join("records.jsonl"))?;
    write_json(&stats, &out.join("ingest_stats.json"))?;

    // Corpus token counts.
    let counts = corpus_counts(&records, stopwords.as_ref());
    write_counts(&counts, &out.join("counts.csv"))?;

    // Sentiment series at all three granularities.
    let mut monthly_sentiment = Vec::new();
    for (group, name) in [
        (GroupKey::StateYear, "state_year"),
        (GroupKey::Month, "month"),
        (GroupKey::Year, "year"),
    ] {
        let series = sentiment_series(&records, &lexicon, group, stopwords.as_ref(), neutral_band);
        let mut buf = Vec::new();
        write_series_csv(&series, &mut buf)?;
        fs::write(out.join(format!("sentiment_{name}.csv")), buf)?;
        if group == GroupKey::Month {
            monthly_sentiment = series;
        }
    }

    // Panel.
    let panel = build_full_panel(
        &records,
        &inputs,
        &lexicon,
        stopwords.as_ref(),
        neutral_band,
        config.include_pandemic_pit,
    )?;
    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    fs::write(out.join("panel.csv"), buf)?;

    // Monthly log-odds of the target word within the corpus.
    let odds = log_odds(monthly_target_counts(&records, &config.target_word))?;
    let mut buf = Vec::new();
    write_log_odds_csv(&odds, &mut buf)?;
    fs::write(out.join("logodds_monthly.csv"), buf)?;
    for period in &odds.skipped {
        eprintln!("warning: log-odds period {period} skipped (zero total)");
    }

    // Changepoints on the monthly sentiment and log-odds series.
    let sentiment_column = SeriesColumn {
        periods: monthly_sentiment
            .iter()
            .filter(|(_, r)| r.rescaled.is_some())
            .map(|(k, _)| k.clone())
            .collect(),
        values: monthly_sentiment
            .iter()
            .filter_map(|(_, r)| r.rescaled)
            .collect(),
    };
    write_changepoint_or_error(&sentiment_column, config, &out.join("changepoint_sentiment.json"))?;
    let odds_column = SeriesColumn {
        periods: odds
            .points
            .iter()
            .filter(|p| p.log10_ratio.is_some())
            .map(|p| p.period.clone())
            .collect(),
        values: odds.points.iter().filter_map(|p| p.log10_ratio).collect(),
    };
    write_changepoint_or_error(&odds_column, config, &out.join("changepoint_logodds.json"))?;

    // Correlations: cross-state per year, within-state across years, and
    // the national yearly sentiment-versus-counts pair.
    let correlations = collect_correlations(&panel, &records, &inputs.pit);
    write_correlations_csv(&correlations, &out.join("correlations.csv"))?;

    // Cross-correlations per state.
    write_crosscorr_csv(&panel, config.max_lag, &out.join("crosscorr.csv"))?;

    // Divergence between the early and late halves of the window.
    let early: Vec<&Record> = records
        .iter()
        .filter(|r| r.local_year() <= config.allotax_split_year)
        .collect();
    let late: Vec<&Record> = records
        .iter()
        .filter(|r| r.local_year() > config.allotax_split_year)
        .collect();
    let early_counts = corpus_counts_ref(&early, stopwords.as_ref());
    let late_counts = corpus_counts_ref(&late, stopwords.as_ref());
    if !early_counts.is_empty() && !late_counts.is_empty() {
        let report = rtd(&early_counts, &late_counts, config.alpha)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let mut buf = Vec::new();
        write_report_csv(&report, &mut buf)?;
        fs::write(out.join("rtd_report.csv"), buf)?;
        write_wordshift_csv(&report, config.top_k.max(50), &out.join("wordshift.csv"))?;
        let cells = allotaxonograph_cells(&early_counts, &late_counts, config.bins)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        write_json(&cells, &out.join("allotax_cells.json"))?;
    } else {
        eprintln!(
            "warning: skipping divergence, empty corpus on one side of {}",
            config.allotax_split_year
        );
    }

    // Accounts over the whole scoped corpus.
    let summary = summarize(
        records.iter().map(|r| r.raw.author_id.as_str()),
        &labels,
        config.top_k,
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    write_json(&summary, &out.join("accounts_summary.json"))?;

    // Plot-ready bundle.
    write_tweet_histogram(&records, &out.join("plots/tweet_histogram.csv"))?;
    write_year_boxplot(&panel, Measure::Ht, &out.join("plots/tweet_rate_boxplot.csv"))?;
    write_year_boxplot(
        &panel,
        Measure::SentRescaled,
        &out.join("plots/sentiment_boxplot.csv"),
    )?;
    write_state_boxplots(&panel, &out.join("plots/boxplot_mania.csv"))?;
    write_logodds_overlay(&odds.points, &inputs.pit, &out.join("plots/logodds_overlay.csv"))?;

    Ok(format!(
        "report complete: {} records, {} panel rows, outputs in {}",
        records.len(),
        panel.cells().len(),
        out.display()
    ))
}

fn corpus_counts_ref(records: &[&Record], stopwords: Option<&signalpanel_core::textprep::StopwordList>) -> TokenCounts {
    let owned: Vec<Record> = records.iter().map(|r| (*r).clone()).collect();
    corpus_counts(&owned, stopwords)
}

fn write_counts(counts: &TokenCounts, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    counts.write_csv(&mut buf).map_err(|e| anyhow::anyhow!("{e}"))?;
    fs::write(path, buf)?;
    Ok(())
}

fn write_changepoint_or_error(
    series: &SeriesColumn,
    config: &RunConfig,
    path: &Path,
) -> Result<()> {
    match changepoint_report(series, config.n_boot, config.seed) {
        Ok(report) => write_json(&report, path),
        Err(e) => write_json(
            &serde_json::json!({ "error": e.to_string(), "series_len": series.values.len() }),
            path,
        ),
    }
}

fn collect_correlations(
    panel: &StateYearPanel,
    _records: &[Record],
    pit: &[signalpanel_core::panel::PitRow],
) -> Vec<CorrelationRow> {
    let mut rows = Vec::new();
    // Cross-state, per year: the density/count rate pairs.
    for year in panel.years() {
        for (x, y) in [
            (Measure::Gd, Measure::Ht),
            (Measure::Hd, Measure::Ht),
            (Measure::Hc, Measure::Ht),
        ] {
            if let Ok(result) = correlate_year(panel, x, y, year, "spearman") {
                rows.push(CorrelationRow::from_result(
                    x.name(),
                    y.name(),
                    year.to_string(),
                    &result,
                ));
            }
        }
    }
    // Within-state, across years.
    let states: std::collections::BTreeSet<_> =
        panel.cells().iter().map(|c| c.state).collect();
    for state in states {
        for (x, y) in [
            (Measure::Hc, Measure::Ht),
            (Measure::Hd, Measure::Ht),
            (Measure::DHc, Measure::DHt),
        ] {
            if let Ok(result) = correlate_state(panel, x, y, state, "spearman") {
                rows.push(CorrelationRow::from_result(
                    x.name(),
                    y.name(),
                    state.to_string(),
                    &result,
                ));
            }
        }
    }
    // National: yearly total homeless count against mean state sentiment.
    let mut national_homeless: BTreeMap<i32, u64> = BTreeMap::new();
    for row in pit {
        if panel.get(row.state, row.year).and_then(|c| c.homeless_count).is_some() {
            *national_homeless.entry(row.year).or_insert(0) += row.overall_homeless;
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&year, &total) in &national_homeless {
        let sentiments: Vec<f64> = panel
            .cells()
            .iter()
            .filter(|c| c.year == year)
            .filter_map(|c| c.sent_rescaled)
            .collect();
        if !sentiments.is_empty() {
            xs.push(total as f64);
            ys.push(sentiments.iter().sum::<f64>() / sentiments.len() as f64);
        }
    }
    if let Ok(result) = signalpanel_core::stats::spearman(&xs, &ys) {
        rows.push(CorrelationRow::from_result(
            "national_homeless",
            "mean_sent_rescaled",
            "national".into(),
            &result,
        ));
    }
    rows
}

fn write_correlations_csv(rows: &[CorrelationRow], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["measure_x", "measure_y", "scope", "coefficient", "p", "n", "method"])?;
    for row in rows {
        wtr.write_record([
            row.measure_x.clone(),
            row.measure_y.clone(),
            row.scope.clone(),
            row.coefficient.to_string(),
            row.p.to_string(),
            row.n.to_string(),
            row.method.clone(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_crosscorr_csv(panel: &StateYearPanel, max_lag: usize, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record([
        "state",
        "measure_x",
        "measure_y",
        "lag",
        "coefficient",
        "n_overlap",
        "best",
    ])?;
    let states: std::collections::BTreeSet<_> = panel.cells().iter().map(|c| c.state).collect();
    for state in states {
        for (x, y) in [(Measure::Hc, Measure::Ht), (Measure::DHc, Measure::DHt)] {
            let (_, xs, ys) = aligned_state_series(panel, x, y, state);
            match signalpanel_core::stats::cross_correlation(&xs, &ys, max_lag) {
                Ok(result) => {
                    for c in &result.coefficients {
                        wtr.write_record([
                            state.to_string(),
                            x.name().to_string(),
                            y.name().to_string(),
                            c.lag.to_string(),
                            c.coefficient.to_string(),
                            c.n_overlap.to_string(),
                            (c.lag == result.best.lag).to_string(),
                        ])?;
                    }
                }
                Err(StatsError::NotComputable(_)) => continue,
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

fn write_tweet_histogram(records: &[Record], path: &Path) -> Result<()> {
    let mut by_year: BTreeMap<i32, u64> = BTreeMap::new();
    for record in records {
        *by_year.entry(record.local_year()).or_insert(0) += 1;
    }
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["year", "count"])?;
    for (year, count) in by_year {
        wtr.write_record([year.to_string(), count.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Linear-interpolation quantiles of sorted values (inclusive endpoints).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

fn five_numbers(mut values: Vec<f64>) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some([
        values[0],
        quantile(&values, 0.25),
        quantile(&values, 0.5),
        quantile(&values, 0.75),
        values[values.len() - 1],
    ])
}

fn write_year_boxplot(panel: &StateYearPanel, measure: Measure, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["year", "min", "q1", "median", "q3", "max", "n_states"])?;
    for year in panel.years() {
        let values: Vec<f64> = panel
            .column_for_year(measure, year)
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let n = values.len();
        if let Some([min, q1, med, q3, max]) = five_numbers(values) {
            wtr.write_record([
                year.to_string(),
                min.to_string(),
                q1.to_string(),
                med.to_string(),
                q3.to_string(),
                max.to_string(),
                n.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn write_state_boxplots(panel: &StateYearPanel, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["state", "measure", "min", "q1", "median", "q3", "max", "n_years"])?;
    let states: std::collections::BTreeSet<_> = panel.cells().iter().map(|c| c.state).collect();
    for state in states {
        for measure in [Measure::Ht, Measure::Hc, Measure::Hd] {
            let values: Vec<f64> = panel
                .series_for_state(measure, state)
                .into_iter()
                .filter_map(|(_, v)| v)
                .collect();
            let n = values.len();
            if let Some([min, q1, med, q3, max]) = five_numbers(values) {
                wtr.write_record([
                    state.to_string(),
                    measure.name().to_string(),
                    min.to_string(),
                    q1.to_string(),
                    med.to_string(),
                    q3.to_string(),
                    max.to_string(),
                    n.to_string(),
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

fn write_logodds_overlay(
    points: &[signalpanel_core::panel::LogOddsPoint],
    pit: &[signalpanel_core::panel::PitRow],
    path: &Path,
) -> Result<()> {
    let mut national: BTreeMap<i32, u64> = BTreeMap::new();
    for row in pit {
        if !signalpanel_core::panel::EXCLUDED_PIT_YEARS.contains(&row.year) {
            *national.entry(row.year).or_insert(0) += row.overall_homeless;
        }
    }
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["month", "log10_ratio", "year", "national_homeless"])?;
    for point in points {
        let year: Option<i32> = point.period.split('-').next().and_then(|y| y.parse().ok());
        let homeless = year.and_then(|y| national.get(&y));
        wtr.write_record([
            point.period.clone(),
            point.log10_ratio.map(|v| v.to_string()).unwrap_or_default(),
            year.map(|y| y.to_string()).unwrap_or_default(),
            homeless.map(|h| h.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
