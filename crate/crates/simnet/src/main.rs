//! Command-line front end: run, sweep and validate scenario files.
//!
//! Exit codes: 0 success, 1 usage error, 2 scenario error (unreadable or
//! inconsistent files), 3 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use simnet::experiment::{build_sim, run_csv, run_scenario, sweep, sweep_csv, ExperimentError};
use simnet::scenario::{sweepable, ScenarioConfig, SWEEPABLE_KEYS};

#[derive(Parser)]
#[command(name = "simnet", version, about = "Deterministic DNS / mDNS network simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and emit per-node traffic statistics.
    Run {
        scenario: PathBuf,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the event trace to this file.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Write statistics to this file instead of stdout.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Run the scenario once per parameter value and emit one CSV table.
    Sweep {
        scenario: PathBuf,
        /// Parameter to vary.
        #[arg(long, value_name = "KEY")]
        vary: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Output file.
        #[arg(long, value_name = "FILE")]
        csv: PathBuf,
    },
    /// Parse and build a scenario without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Covers --help and --version too, which exit 0.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("simnet: {msg}");
            ExitCode::from(code)
        }
    }
}

type CmdError = (u8, String);

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            seed,
            trace,
            csv,
        } => {
            let cfg = load(&scenario)?;
            let seed = seed.unwrap_or(cfg.seed);
            let result = run_scenario(&cfg, seed, trace.is_some()).map_err(from_run)?;
            warn_all(&result.warnings);
            for v in &result.violations {
                eprintln!("simnet: privacy violation: {v}");
            }
            if let Some(path) = trace {
                let mut text = result.trace.join("\n");
                if !text.is_empty() {
                    text.push('\n');
                }
                write_file(&path, &text)?;
            }
            let table = run_csv(&result);
            match csv {
                Some(path) => write_file(&path, &table)?,
                None => print!("{table}"),
            }
            Ok(())
        }
        Cmd::Sweep {
            scenario,
            vary,
            values,
            csv,
        } => {
            if !sweepable(&vary) {
                return Err((
                    1,
                    format!(
                        "--vary {vary} is not a scenario parameter (expected one of: {})",
                        SWEEPABLE_KEYS.join(", ")
                    ),
                ));
            }
            let cfg = load(&scenario)?;
            let rows = sweep(&cfg, &vary, &values).map_err(from_run)?;
            for (_, result) in &rows {
                warn_all(&result.warnings);
                for v in &result.violations {
                    eprintln!("simnet: privacy violation: {v}");
                }
            }
            write_file(&csv, &sweep_csv(&rows))
        }
        Cmd::Validate { scenario } => {
            let cfg = load(&scenario)?;
            let (sim, warnings) = build_sim(&cfg, cfg.seed, false).map_err(from_build)?;
            warn_all(&warnings);
            println!(
                "{}: ok ({} nodes, {}s)",
                scenario.display(),
                sim.topology().node_count(),
                cfg.duration
            );
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, CmdError> {
    ScenarioConfig::load(path).map_err(|e| (2, e.to_string()))
}

fn from_build(e: ExperimentError) -> CmdError {
    (if e.is_scenario_fault() { 2 } else { 3 }, e.to_string())
}

fn from_run(e: ExperimentError) -> CmdError {
    from_build(e)
}

fn write_file(path: &Path, text: &str) -> Result<(), CmdError> {
    std::fs::write(path, text).map_err(|e| (3, format!("cannot write {}: {e}", path.display())))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("simnet: warning: {w}");
    }
}
