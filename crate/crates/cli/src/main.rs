mod config;
mod report;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;

use qsdc_core::analytics::{parse_grid, sweep, SweepQuantity};
use qsdc_core::protocol::ScheduleStage;
use qsdc_core::{run_schedule, run_session, session_records, QsdcError, SessionStatistics};

use config::{Args, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn io(path: &Path, e: io::Error) -> Self {
        Self::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "invalid configuration: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<QsdcError> for CliError {
    fn from(e: QsdcError) -> Self {
        Self::Config(e.to_string())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    emit(out, &(serde_json::to_string_pretty(value).expect("report serializes") + "\n"))
}

fn clock_seed() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0)
}

fn run_sweep(args: &Args, name: &str) -> Result<(), CliError> {
    let grid = parse_grid(args.grid.as_deref().unwrap_or_default())?;
    let table = sweep(SweepQuantity::parse(name, args.scenario)?, &grid)?;
    emit(args.out.as_deref(), &table.to_delimited(args.format.delimiter()))
}

fn with_transcript(config: &RunConfig, path: &Path) -> Result<SessionStatistics, CliError> {
    let session = config.session()?;
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut stats = SessionStatistics::default();
    for rec in session_records(&session)? {
        let rec = rec?;
        stats.record(&rec);
        serde_json::to_writer(&mut w, &rec).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(stats)
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(name) = &args.sweep {
        return run_sweep(&args, name);
    }
    let mut config = RunConfig::from_args(&args)?;
    config.seed.get_or_insert_with(clock_seed);
    if let Some(path) = &args.save_config {
        config.save(path)?;
    }
    if let Some(spec) = &config.schedule {
        if args.transcript.is_some() {
            return Err(CliError::Config("--transcript applies to single sessions only".into()));
        }
        let stages = ScheduleStage::parse_list(spec)?;
        let report = run_schedule(&stages, config.policy(), config.seed.unwrap_or_default(), config.workers)?;
        return emit_json(args.out.as_deref(), &report::schedule_report(&config, report));
    }
    let stats = match &args.transcript {
        Some(path) => with_transcript(&config, path)?,
        None => run_session(&config.session()?)?,
    };
    emit_json(args.out.as_deref(), &report::session_report(&config, &stats)?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsdc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
