use simex_core::data::ValidationFlavor;
use simex_core::distributions::DistributionSpec;
use simex_core::parallel::{Parallelism, Sequential};
use simex_core::scenario::{run_scenario_with, MeasurementDesign, OutcomeModel, ScenarioMethod, SimexSettings};
use simex_core::{ExtrapolantKind, ScenarioSpec};

/// Runs tasks last-to-first, to expose any dependence on execution order.
struct Reversed;

impl Parallelism for Reversed {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        let mut out: Vec<T> = (0..n).rev().map(f).collect();
        out.reverse();
        out
    }
}

fn spec(measurement: MeasurementDesign, outcome: OutcomeModel) -> ScenarioSpec {
    ScenarioSpec {
        name: "pipeline".into(),
        description: String::new(),
        n: 300,
        reps: 4,
        seed: 99,
        x: DistributionSpec::Normal {
            mean: 1.0,
            variance: 1.0,
        },
        z: vec![],
        outcome,
        error: DistributionSpec::Laplace {
            location: 0.0,
            scale: 0.4,
        },
        measurement,
        methods: vec![
            ScenarioMethod::Truth,
            ScenarioMethod::Naive,
            ScenarioMethod::Parametric,
            ScenarioMethod::Nonparametric,
        ],
        simex: SimexSettings::new(20, ExtrapolantKind::Quadratic),
        bootstrap: None,
        variance: None,
    }
}

#[test]
fn results_do_not_depend_on_execution_order() {
    let cases = [
        spec(MeasurementDesign::Replicates { k: 3 }, OutcomeModel::FourthMoment),
        spec(
            MeasurementDesign::Validation {
                fraction: 0.2,
                flavor: ValidationFlavor::Internal,
            },
            OutcomeModel::Logistic { beta: vec![0.5, -1.0] },
        ),
    ];
    for s in &cases {
        let a = run_scenario_with(&Sequential, s).unwrap();
        let b = run_scenario_with(&Reversed, s).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn seed_changes_results() {
    let s = spec(MeasurementDesign::Replicates { k: 2 }, OutcomeModel::FourthMoment);
    let mut t = s.clone();
    t.seed += 1;
    let a = run_scenario_with(&Sequential, &s).unwrap();
    let b = run_scenario_with(&Sequential, &t).unwrap();
    assert_ne!(a.outcomes, b.outcomes);
}

#[test]
fn corrections_move_toward_truth_for_the_fourth_moment() {
    let mut s = spec(MeasurementDesign::Replicates { k: 2 }, OutcomeModel::FourthMoment);
    s.n = 4000;
    s.reps = 10;
    s.error = DistributionSpec::Normal {
        mean: 0.0,
        variance: 1.0,
    };
    let run = run_scenario_with(&Sequential, &s).unwrap();
    let bias = |m| run.report.method(m).unwrap().coordinates[0].bias.abs();
    let naive = bias(ScenarioMethod::Naive);
    assert!(bias(ScenarioMethod::Parametric) < naive / 3.0);
    assert!(bias(ScenarioMethod::Nonparametric) < naive / 3.0);
}
