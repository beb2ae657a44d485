//! Built-in simulation studies at full scale.
//!
//! A study expands into cells, each a complete [`ScenarioSpec`] named
//! `study/param=value/...`. Running a study runs every cell; a single cell
//! can be selected by its full name.

use simex_core::data::ValidationFlavor;
use simex_core::distributions::DistributionSpec;
use simex_core::extrapolant::ExtrapolantKind;
use simex_core::scenario::{
    MeasurementDesign, OutcomeModel, ScenarioMethod, ScenarioSpec, SimexSettings, VarianceSettings,
};
use simex_core::uncertainty::BootstrapSpec;

use ScenarioMethod::{Naive, Nonparametric, Parametric, Truth};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug)]
pub struct Study {
    pub name: String,
    pub description: String,
    pub cells: Vec<ScenarioSpec>,
}

pub fn studies() -> Vec<Study> {
    vec![table1(), table2(), table3(), table3b(), app1(), app2(), app3()]
}

pub fn study(name: &str) -> Option<Study> {
    studies().into_iter().find(|s| s.name == name)
}

/// A study by name, or the single cell with that full name.
pub fn lookup(name: &str) -> Option<Study> {
    if let Some(s) = study(name) {
        return Some(s);
    }
    let prefix = name.split('/').next()?;
    let mut s = study(prefix)?;
    s.cells.retain(|c| c.name == name);
    (!s.cells.is_empty()).then_some(s)
}

fn fourth_moment_base(name: String, n: usize, reps: usize, replicates: usize) -> ScenarioSpec {
    ScenarioSpec {
        name,
        description: String::new(),
        n,
        reps,
        seed: DEFAULT_SEED,
        x: DistributionSpec::Normal {
            mean: 5.0,
            variance: 4.0,
        },
        z: vec![],
        outcome: OutcomeModel::FourthMoment,
        error: DistributionSpec::StudentT { df: 5.0 },
        measurement: MeasurementDesign::Replicates { k: 2 },
        methods: vec![Truth, Naive, Parametric, Nonparametric],
        simex: SimexSettings::new(replicates, ExtrapolantKind::Quadratic),
        bootstrap: None,
        variance: None,
    }
}

/// Logistic slope with t-distributed replicate errors.
fn table1() -> Study {
    let cells = [3.0, 4.0, 5.0, 10.0, 30.0]
        .into_iter()
        .map(|df| ScenarioSpec {
            name: format!("table1/df={df}"),
            description: format!("logistic regression, X ~ N(1, 2), two replicates with t({df}) error"),
            n: 5000,
            reps: 200,
            seed: DEFAULT_SEED,
            x: DistributionSpec::Normal {
                mean: 1.0,
                variance: 2.0,
            },
            z: vec![],
            outcome: OutcomeModel::Logistic { beta: vec![1.0, -1.0] },
            error: DistributionSpec::StudentT { df },
            measurement: MeasurementDesign::Replicates { k: 2 },
            methods: vec![Truth, Naive, Parametric, Nonparametric],
            simex: SimexSettings::new(100, ExtrapolantKind::Rational),
            bootstrap: Some(BootstrapSpec::new(500, 0.95).expect("valid bootstrap")),
            variance: None,
        })
        .collect();
    Study {
        name: "table1".into(),
        description: "logistic slope, t-distributed replicate errors, BC bootstrap coverage".into(),
        cells,
    }
}

/// Fourth moment of N(5, 4) over sample sizes, two t5 replicates.
fn table2() -> Study {
    let cells = [100, 500, 1000, 5000, 10_000, 20_000, 50_000, 100_000]
        .into_iter()
        .map(|n| {
            let mut c = fourth_moment_base(format!("table2/n={n}"), n, 1000, 500);
            c.description = "fourth moment of N(5, 4), two replicates with t(5) error".into();
            c
        })
        .collect();
    Study {
        name: "table2".into(),
        description: "fourth moment, relative MSE against the error-free estimator over n".into(),
        cells,
    }
}

/// Laplace error whose sd is `ratio` times sd(X) = 2.
fn laplace_for_ratio(ratio: f64) -> DistributionSpec {
    let sd = 2.0 * ratio;
    DistributionSpec::Laplace {
        location: 0.0,
        scale: sd / std::f64::consts::SQRT_2,
    }
}

fn validation_cell(study: &str, n: usize, pct: u32, ratio: f64) -> ScenarioSpec {
    ScenarioSpec {
        name: format!("{study}/n={n}/pct={pct}/ratio={ratio}"),
        description: "logistic regression, X ~ Gamma(1, 2), Laplace error, internal validation".into(),
        n,
        reps: 1000,
        seed: DEFAULT_SEED,
        x: DistributionSpec::Gamma {
            shape: 1.0,
            scale: 2.0,
            centered: false,
        },
        z: vec![],
        outcome: OutcomeModel::Logistic { beta: vec![1.0, -1.0] },
        error: laplace_for_ratio(ratio),
        measurement: MeasurementDesign::Validation {
            fraction: f64::from(pct) / 100.0,
            flavor: ValidationFlavor::Internal,
        },
        methods: vec![Naive, Parametric, Nonparametric],
        simex: SimexSettings::new(100, ExtrapolantKind::Rational),
        bootstrap: None,
        variance: None,
    }
}

/// Cells where the validation sample is too small for the error size.
fn is_unstable(n: usize, pct: u32, ratio: f64) -> bool {
    let n1 = n * pct as usize / 100;
    (ratio == 1.0 && n1 <= 100) || (ratio == 2.0 && n1 <= 1000)
}

fn validation_grid() -> impl Iterator<Item = (usize, u32, f64)> {
    [1000usize, 10_000, 100_000].into_iter().flat_map(|n| {
        [5u32, 10, 50]
            .into_iter()
            .flat_map(move |pct| [0.1, 0.5, 1.0, 2.0].into_iter().map(move |r| (n, pct, r)))
    })
}

fn table3() -> Study {
    let cells = validation_grid()
        .filter(|&(n, p, r)| !is_unstable(n, p, r))
        .map(|(n, p, r)| validation_cell("table3", n, p, r))
        .collect();
    Study {
        name: "table3".into(),
        description: "logistic slope, Laplace error, internal validation of 5/10/50%".into(),
        cells,
    }
}

fn table3b() -> Study {
    let cells = validation_grid()
        .filter(|&(n, p, r)| is_unstable(n, p, r))
        .map(|(n, p, r)| validation_cell("table3b", n, p, r))
        .collect();
    Study {
        name: "table3b".into(),
        description: "validation samples too small for the error size (NP instability)".into(),
        cells,
    }
}

/// Fourth moment with normal or contaminated-normal error, two or three replicates.
fn app1() -> Study {
    let mut cells = Vec::new();
    for rho in [0.0, 0.5] {
        for k in [2usize, 3] {
            let mut c = fourth_moment_base(format!("app1/rho={rho}/k={k}"), 15_000, 1000, 500);
            c.description = "fourth moment of N(5, 4), contaminated-normal replicate error".into();
            c.error = DistributionSpec::ContaminatedNormal {
                rho,
                sd_base: 1.0,
                sd_inflated: 5.0,
            };
            c.measurement = MeasurementDesign::Replicates { k };
            c.methods = vec![Truth, Nonparametric];
            cells.push(c);
        }
    }
    Study {
        name: "app1".into(),
        description: "fourth moment, two versus three replicates".into(),
        cells,
    }
}

/// Coverage of normal intervals from the SIMEX variance estimate.
fn app2() -> Study {
    let cells = [500, 5000, 15_000, 50_000]
        .into_iter()
        .map(|n| {
            let mut c = fourth_moment_base(format!("app2/n={n}"), n, 1000, 500);
            c.description = "fourth moment, SIMEX variance estimate and normal interval coverage".into();
            c.methods = vec![Truth, Nonparametric];
            c.variance = Some(VarianceSettings {
                levels: vec![0.90, 0.95, 0.99],
                extrapolant: ExtrapolantKind::Quadratic,
            });
            c
        })
        .collect();
    Study {
        name: "app2".into(),
        description: "SIMEX variance estimation coverage over n".into(),
        cells,
    }
}

/// Skewed (centered gamma) error with external covariate, 5% validation.
fn app3() -> Study {
    let cell = ScenarioSpec {
        name: "app3".into(),
        description: "logistic regression with Z, X ~ Gamma(2, 1), centered Gamma(1, 1.5) error".into(),
        n: 100_000,
        reps: 1000,
        seed: DEFAULT_SEED,
        x: DistributionSpec::Gamma {
            shape: 2.0,
            scale: 1.0,
            centered: false,
        },
        z: vec![DistributionSpec::standard_normal()],
        outcome: OutcomeModel::Logistic {
            beta: vec![2.5, -1.25, 1.0],
        },
        error: DistributionSpec::Gamma {
            shape: 1.0,
            scale: 1.5,
            centered: true,
        },
        measurement: MeasurementDesign::Validation {
            fraction: 0.05,
            flavor: ValidationFlavor::Internal,
        },
        methods: vec![Truth, Naive, Parametric, Nonparametric],
        simex: SimexSettings::new(200, ExtrapolantKind::Rational),
        bootstrap: None,
        variance: None,
    };
    Study {
        name: "app3".into(),
        description: "asymmetric validation-data errors, three logistic coefficients".into(),
        cells: vec![cell],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_cell_is_valid_and_uniquely_named() {
        let mut names = Vec::new();
        for s in studies() {
            assert!(!s.cells.is_empty(), "{}", s.name);
            for c in &s.cells {
                c.validate().unwrap_or_else(|e| panic!("{}: {e}", c.name));
                assert!(c.name.starts_with(&s.name));
                names.push(c.name.clone());
            }
        }
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
    }

    #[test]
    fn table3_split() {
        let t3 = table3().cells.len();
        let t3b = table3b().cells.len();
        assert_eq!(t3 + t3b, 36);
        assert_eq!(t3b, 7);
        assert!(lookup("table3/n=10000/pct=5/ratio=0.5").is_some());
        assert!(lookup("table3b/n=1000/pct=5/ratio=2").is_some());
        assert!(lookup("table3/n=1000/pct=5/ratio=2").is_none());
    }

    #[test]
    fn lookup_cells() {
        let s = lookup("table1/df=3").unwrap();
        assert_eq!(s.cells.len(), 1);
        assert_eq!(lookup("table1").unwrap().cells.len(), 5);
        assert!(lookup("nope").is_none());
    }

    #[test]
    fn laplace_ratio() {
        let sd = laplace_for_ratio(0.5).variance().unwrap().sqrt();
        assert!((sd - 1.0).abs() < 1e-12);
    }
}
