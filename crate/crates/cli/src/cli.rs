//! Command-line interface.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use simex_core::extrapolant::ExtrapolantKind;

use crate::builtins;
use crate::correct::{run_correction, CorrectConfig};
use crate::error::{CliError, CliResult};
use crate::harness::{self, Overrides};
use crate::io;
use crate::parallel::Threads;

#[derive(Parser, Debug)]
#[command(name = "simex", version, about = "SIMEX correction for additive measurement error")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExtrapolantArg {
    Linear,
    Quadratic,
    Rational,
}

impl From<ExtrapolantArg> for ExtrapolantKind {
    fn from(a: ExtrapolantArg) -> Self {
        match a {
            ExtrapolantArg::Linear => ExtrapolantKind::Linear,
            ExtrapolantArg::Quadratic => ExtrapolantKind::Quadratic,
            ExtrapolantArg::Rational => ExtrapolantKind::Rational,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a builtin study, a single builtin cell, or a scenario file.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        /// SIMEX replicates per lambda.
        #[arg(long = "B")]
        replicates: Option<usize>,
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long, value_enum)]
        extrapolant: Option<ExtrapolantArg>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Directory for report.json and estimates.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit the timestamp so identical runs give identical files.
        #[arg(long)]
        reproducible: bool,
    },
    /// Correct an observed dataset.
    Correct {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Directory for result.json, trace.csv and qq.csv; without it the
        /// JSON goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        reproducible: bool,
    },
    /// List builtin studies and their cells.
    ListScenarios,
}

fn workers(w: Option<usize>) -> usize {
    w.unwrap_or_else(|| Threads::available().workers())
}

fn to_json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Io(std::io::Error::other(e)))
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            n,
            reps,
            replicates,
            grid_max,
            extrapolant,
            seed,
            workers: w,
            out,
            reproducible,
        } => {
            let study = harness::resolve(&scenario)?;
            let overrides = Overrides {
                n,
                reps,
                replicates,
                grid_max,
                extrapolant: extrapolant.map(Into::into),
                seed,
            };
            let runs = harness::run_study(&study, &overrides, workers(w))?;
            let report = harness::build_report(&study, &runs, reproducible);
            if let Some(dir) = out {
                io::write_file(&dir.join("report.json"), to_json(&report)?)?;
                io::write_file(&dir.join("estimates.csv"), harness::estimates_csv(&runs)?)?;
            }
            print!("{}", harness::summary_table(&report));
            Ok(())
        }
        Command::Correct {
            data,
            validation,
            config,
            seed,
            workers: w,
            out,
            reproducible,
        } => {
            let cfg: CorrectConfig = io::read_config(&config)?;
            let observed = io::read_observed(&data)?;
            let pairs = validation
                .map(|p| io::read_validation(&p, cfg.validation_flavor))
                .transpose()?;
            let result = run_correction(&cfg, &observed, pairs.as_ref(), seed, workers(w), reproducible)?;
            let json = to_json(&result.report)?;
            match out {
                Some(dir) => {
                    let traces: Vec<(&str, _)> = result.traces.iter().map(|(m, r)| (m.tag(), r)).collect();
                    let mut buf = Vec::new();
                    io::write_trace(&mut buf, &traces, &result.coordinate_names)?;
                    io::write_file(&dir.join("trace.csv"), buf)?;
                    if let Some(set) = &result.prepared.error_set {
                        let mut buf = Vec::new();
                        io::write_qq(&mut buf, set)?;
                        io::write_file(&dir.join("qq.csv"), buf)?;
                    }
                    io::write_file(&dir.join("result.json"), &json)?;
                    for m in &result.report.methods {
                        let est: Vec<String> = m.coordinates.iter().map(|c| format!("{}={:.6}", c.name, c.estimate)).collect();
                        println!("{:<6} {}", m.method.tag(), est.join(" "));
                    }
                }
                None => println!("{json}"),
            }
            Ok(())
        }
        Command::ListScenarios => {
            for s in builtins::studies() {
                println!("{:<8} {} ({} cells)", s.name, s.description, s.cells.len());
                for c in &s.cells {
                    println!("    {}", c.name);
                }
            }
            Ok(())
        }
    }
}

/// Parse arguments, run, and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
