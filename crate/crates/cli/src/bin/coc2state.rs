//! Preprocessing utility: sums Continuum-of-Care level point-in-time rows
//! (`coc_id,state,year,overall_homeless`) into the state-level
//! `state,year,overall_homeless` CSV the panel expects.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use signalpanel_core::ingest::StateCode;
use signalpanel_core::panel::aggregate_coc_rows;

#[derive(Parser)]
#[command(
    name = "coc2state",
    about = "Aggregate CoC-level point-in-time counts to state level."
)]
struct Cli {
    /// Input CSV with header coc_id,state,year,overall_homeless.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<(), String> {
    let file = std::fs::File::open(&cli.input)
        .map_err(|e| format!("opening {}: {e}", cli.input.display()))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let line = i + 2;
        let coc_id = record.get(0).unwrap_or("").to_string();
        let state = StateCode::parse(record.get(1).unwrap_or(""))
            .ok_or(format!("line {line}: bad state code"))?;
        let year: i32 = record
            .get(2)
            .and_then(|v| v.trim().parse().ok())
            .ok_or(format!("line {line}: bad year"))?;
        let count: u64 = record
            .get(3)
            .and_then(|v| v.trim().parse().ok())
            .ok_or(format!("line {line}: bad overall_homeless"))?;
        rows.push((coc_id, state, year, count));
    }
    let aggregated = aggregate_coc_rows(rows);

    let out: Box<dyn std::io::Write> = match &cli.output {
        Some(path) => Box::new(
            std::fs::File::create(path).map_err(|e| format!("creating {}: {e}", path.display()))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["state", "year", "overall_homeless"])
        .map_err(|e| e.to_string())?;
    for row in aggregated {
        wtr.write_record([
            row.state.to_string(),
            row.year.to_string(),
            row.overall_homeless.to_string(),
        ])
        .map_err(|e| e.to_string())?;
    }
    wtr.flush().map_err(|e| e.to_string())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("{}", serde_json::json!({ "error": message }));
            ExitCode::from(1)
        }
    }
}
