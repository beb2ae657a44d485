//! Running studies and writing their reports.

use std::path::Path;

use serde::{Deserialize, Serialize};
use simex_core::extrapolant::ExtrapolantKind;
use simex_core::scenario::{run_scenario_with, MetricsReport, ScenarioRun, ScenarioSpec};
use simex_core::simex::LambdaGrid;

use crate::builtins::{self, Study};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::parallel::Threads;

pub const REPORT_SCHEMA: &str = "simex-report/1";

/// Command-line overrides applied to every cell of a study.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub replicates: Option<usize>,
    pub grid_max: Option<f64>,
    pub extrapolant: Option<ExtrapolantKind>,
    pub seed: Option<u64>,
}

impl Overrides {
    /// `grid_max = G` spreads the parametric grid over `[0, G]` keeping its
    /// size, and sets the nonparametric grid to `{0, …, G}` (G integral).
    pub fn apply(&self, spec: &mut ScenarioSpec) -> CliResult<()> {
        if let Some(n) = self.n {
            spec.n = n;
        }
        if let Some(r) = self.reps {
            spec.reps = r;
        }
        if let Some(b) = self.replicates {
            spec.simex.replicates = b;
        }
        if let Some(k) = self.extrapolant {
            spec.simex.extrapolant = k;
            spec.simex.parametric_extrapolant = None;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(g) = self.grid_max {
            if !(g >= 2.0) || g.fract() != 0.0 {
                return Err(CliError::Config("--grid-max must be an integer of at least 2".into()));
            }
            spec.simex.parametric_grid = LambdaGrid::parametric(g, spec.simex.parametric_grid.len())?;
            spec.simex.nonparametric_grid = LambdaGrid::nonparametric(g as usize + 1)?;
        }
        spec.validate()?;
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StudyFile {
    Study {
        name: String,
        #[serde(default)]
        description: String,
        cells: Vec<ScenarioSpec>,
    },
    Cell(Box<ScenarioSpec>),
}

/// A builtin study or cell name, or a scenario file (one cell, or a study
/// with a `cells` list).
pub fn resolve(scenario: &str) -> CliResult<Study> {
    if let Some(s) = builtins::lookup(scenario) {
        return Ok(s);
    }
    let path = Path::new(scenario);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "'{scenario}' is neither a builtin scenario nor a file (see list-scenarios)"
        )));
    }
    Ok(match io::read_config::<StudyFile>(path)? {
        StudyFile::Study {
            name,
            description,
            cells,
        } => Study {
            name,
            description,
            cells,
        },
        StudyFile::Cell(c) => Study {
            name: c.name.clone(),
            description: c.description.clone(),
            cells: vec![*c],
        },
    })
}

pub fn run_study(study: &Study, overrides: &Overrides, workers: usize) -> CliResult<Vec<ScenarioRun>> {
    let par = Threads::new(workers);
    study
        .cells
        .iter()
        .map(|cell| {
            let mut spec = cell.clone();
            overrides.apply(&mut spec)?;
            Ok(run_scenario_with(&par, &spec)?)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    pub study: String,
    pub description: String,
    pub cells: Vec<MetricsReport>,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn build_report(study: &Study, runs: &[ScenarioRun], reproducible: bool) -> SimulationReport {
    SimulationReport {
        schema: REPORT_SCHEMA.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        generated_at_unix: (!reproducible).then(unix_now),
        study: study.name.clone(),
        description: study.description.clone(),
        cells: runs.iter().map(|r| r.report.clone()).collect(),
    }
}

/// Rows `cell, rep, method, coordinate, estimate, error` for every
/// replication.
pub fn estimates_csv(runs: &[ScenarioRun]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(["cell", "rep", "method", "coordinate", "estimate", "error"])
        .map_err(io_err)?;
    for run in runs {
        let names = run.report.scenario.coordinate_names();
        for o in &run.outcomes {
            for m in &o.methods {
                for (j, name) in names.iter().enumerate() {
                    let est = m.estimate.as_ref().map_or(String::new(), |e| e[j].to_string());
                    w.write_record([
                        run.report.scenario.name.as_str(),
                        &o.rep.to_string(),
                        m.method.tag(),
                        name,
                        &est,
                        m.error.as_deref().unwrap_or(""),
                    ])
                    .map_err(io_err)?;
                }
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One line per cell, method and coordinate.
pub fn summary_table(report: &SimulationReport) -> String {
    let mut out = String::new();
    for cell in &report.cells {
        out.push_str(&format!("{} (n={}, reps={})\n", cell.scenario.name, cell.scenario.n, cell.scenario.reps));
        for m in &cell.methods {
            for c in &m.coordinates {
                let rel = c.relative_mse.map_or("-".to_string(), |r| format!("{r:.3}"));
                out.push_str(&format!(
                    "  {:<6} {:<14} mse={:<12.6} rel={:<8} median={:<12.6} failed={}{}\n",
                    m.method.tag(),
                    c.name,
                    c.mse,
                    rel,
                    c.median,
                    m.failed,
                    if m.valid { "" } else { " INVALID" }
                ));
                for cov in &c.coverage {
                    out.push_str(&format!(
                        "         coverage[{:?} {}] = {:.3}\n",
                        cov.source, cov.level, cov.coverage
                    ));
                }
            }
        }
    }
    out
}
