//! Declarative Monte Carlo studies.
//!
//! A [`ScenarioSpec`] describes how to generate data (covariate, outcome and
//! error model), which methods to run and how to summarize them. Each
//! replication draws from its own stream `root.derive(rep)`, so a study gives
//! the same report however its replications are scheduled.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_prepared, bootstrap_method, AnalysisSettings};
use crate::data::{ObservedData, ValidationFlavor, ValidationPairs};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorInput, EstimatorSpec};
use crate::extrapolant::ExtrapolantKind;
use crate::linalg::Matrix;
use crate::metrics::{bias, compute_coverage, compute_mse, mean, median};
use crate::parallel::{Parallelism, Sequential};
use crate::rng::RandomStream;
use crate::simex::{LambdaGrid, Method, SimexConfig, SimexData};
use crate::uncertainty::{simex_variance, variance_intervals, BootstrapSpec, Interval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioMethod {
    /// The estimator applied to the error-free covariate.
    #[serde(rename = "truth")]
    Truth,
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "P", alias = "p")]
    Parametric,
    #[serde(rename = "NP", alias = "np")]
    Nonparametric,
}

impl ScenarioMethod {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Truth => "truth",
            Self::Naive => "naive",
            Self::Parametric => "P",
            Self::Nonparametric => "NP",
        }
    }

    fn code(self) -> u64 {
        self as u64
    }

    fn simex_method(self) -> Option<Method> {
        match self {
            Self::Truth => None,
            Self::Naive => Some(Method::Naive),
            Self::Parametric => Some(Method::Parametric),
            Self::Nonparametric => Some(Method::Nonparametric),
        }
    }
}

/// How `Y` depends on `(X, Z)`, and hence which estimator is studied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeModel {
    /// No outcome; the target is `E[X⁴]`.
    FourthMoment,
    /// `logit P(Y = 1) = β₀ + β₁ X + Σ β_{1+j} Z_j`.
    Logistic { beta: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementDesign {
    /// `k` replicate proxies per subject.
    Replicates { k: usize },
    /// One proxy per subject, with `round(fraction · n)` validation pairs.
    Validation {
        fraction: f64,
        #[serde(default = "internal")]
        flavor: ValidationFlavor,
    },
}

fn internal() -> ValidationFlavor {
    ValidationFlavor::Internal
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimexSettings {
    pub replicates: usize,
    pub extrapolant: ExtrapolantKind,
    /// Extrapolant for P-SIMEX when it differs from `extrapolant`.
    #[serde(default)]
    pub parametric_extrapolant: Option<ExtrapolantKind>,
    #[serde(default = "LambdaGrid::parametric_default")]
    pub parametric_grid: LambdaGrid,
    #[serde(default = "LambdaGrid::nonparametric_default")]
    pub nonparametric_grid: LambdaGrid,
    /// Known per-measurement error variance for P-SIMEX.
    #[serde(default)]
    pub known_sigma2: Option<f64>,
}

impl SimexSettings {
    pub fn new(replicates: usize, extrapolant: ExtrapolantKind) -> Self {
        Self {
            replicates,
            extrapolant,
            parametric_extrapolant: None,
            parametric_grid: LambdaGrid::parametric_default(),
            nonparametric_grid: LambdaGrid::nonparametric_default(),
            known_sigma2: None,
        }
    }

    pub fn analysis(&self, with_variance: bool) -> AnalysisSettings {
        let mut p = SimexConfig::new(
            Method::Parametric,
            self.parametric_grid.clone(),
            self.replicates,
            self.parametric_extrapolant.unwrap_or(self.extrapolant),
        );
        p.known_sigma2 = self.known_sigma2;
        let mut np = SimexConfig::new(
            Method::Nonparametric,
            self.nonparametric_grid.clone(),
            self.replicates,
            self.extrapolant,
        );
        np.with_variance = with_variance;
        AnalysisSettings {
            parametric: p,
            nonparametric: np,
            contrast: None,
        }
    }
}

fn quadratic() -> ExtrapolantKind {
    ExtrapolantKind::Quadratic
}

/// Normal intervals for NP-SIMEX from the SIMEX variance estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceSettings {
    pub levels: Vec<f64>,
    #[serde(default = "quadratic")]
    pub extrapolant: ExtrapolantKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub x: DistributionSpec,
    #[serde(default)]
    pub z: Vec<DistributionSpec>,
    pub outcome: OutcomeModel,
    pub error: DistributionSpec,
    pub measurement: MeasurementDesign,
    pub methods: Vec<ScenarioMethod>,
    pub simex: SimexSettings,
    #[serde(default)]
    pub bootstrap: Option<BootstrapSpec>,
    #[serde(default)]
    pub variance: Option<VarianceSettings>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.n < 2 {
            return cfg("n must be at least 2".into());
        }
        if self.reps == 0 {
            return cfg("reps must be at least 1".into());
        }
        self.x.validate()?;
        self.error.validate()?;
        for z in &self.z {
            z.validate()?;
        }
        match &self.measurement {
            MeasurementDesign::Replicates { k } if *k < 2 => return cfg("replicate design needs k >= 2".into()),
            MeasurementDesign::Validation { fraction, .. } => {
                if !(*fraction > 0.0 && *fraction <= 1.0) {
                    return cfg("validation fraction must lie in (0, 1]".into());
                }
                if self.validation_size() < 2 {
                    return cfg("validation sample must have at least two rows".into());
                }
            }
            _ => {}
        }
        match &self.outcome {
            OutcomeModel::FourthMoment => {
                if !self.z.is_empty() {
                    return cfg("the fourth-moment design takes no Z covariates".into());
                }
                if self.x.fourth_raw_moment().is_none() {
                    return cfg("X must have a finite fourth moment".into());
                }
            }
            OutcomeModel::Logistic { beta } => {
                if beta.len() != 2 + self.z.len() {
                    return cfg(format!(
                        "logistic beta needs {} entries (intercept, x, z...), found {}",
                        2 + self.z.len(),
                        beta.len()
                    ));
                }
            }
        }
        if self.methods.is_empty() {
            return cfg("no methods requested".into());
        }
        let mut sorted = self.methods.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.methods.len() {
            return cfg("methods listed more than once".into());
        }
        if self.simex.replicates == 0 {
            return cfg("B must be at least 1".into());
        }
        if let Some(v) = &self.variance {
            if !self.methods.contains(&ScenarioMethod::Nonparametric) {
                return cfg("variance intervals are computed for NP-SIMEX, which is not requested".into());
            }
            if v.levels.is_empty() || v.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
                return cfg("variance levels must lie in (0, 1)".into());
            }
            if self.simex.replicates < 2 {
                return cfg("variance estimation needs B >= 2".into());
            }
        }
        Ok(())
    }

    pub fn validation_size(&self) -> usize {
        match &self.measurement {
            MeasurementDesign::Validation { fraction, .. } => libm::round(fraction * self.n as f64) as usize,
            MeasurementDesign::Replicates { .. } => 0,
        }
    }

    pub fn estimator(&self) -> EstimatorSpec {
        match self.outcome {
            OutcomeModel::FourthMoment => EstimatorSpec::FourthMoment,
            OutcomeModel::Logistic { .. } => EstimatorSpec::logistic(),
        }
    }

    /// The parameter each method estimates.
    pub fn truth(&self) -> Vec<f64> {
        match &self.outcome {
            OutcomeModel::FourthMoment => vec![self.x.fourth_raw_moment().unwrap_or(f64::NAN)],
            OutcomeModel::Logistic { beta } => beta.clone(),
        }
    }

    pub fn coordinate_names(&self) -> Vec<String> {
        self.estimator().coordinate_names(self.z.len())
    }

    /// Data for replication `rep`. Components use separate substreams, so
    /// for example changing the error law leaves `X` unchanged.
    pub fn generate(&self, rep: usize) -> Result<GeneratedData> {
        let root = RandomStream::new(self.seed).derive(rep as u64).derive(0);
        let n = self.n;
        let x = self.x.sample(n, &mut root.derive(0))?;
        let p = self.z.len();
        let mut z = Matrix::zeros(n, p);
        for (j, dist) in self.z.iter().enumerate() {
            let col = dist.sample(n, &mut root.derive(1).derive(j as u64))?;
            for (i, v) in col.into_iter().enumerate() {
                z[(i, j)] = v;
            }
        }
        let y = match &self.outcome {
            OutcomeModel::FourthMoment => vec![0.0; n],
            OutcomeModel::Logistic { beta } => {
                let mut rng = root.derive(2);
                (0..n)
                    .map(|i| {
                        let eta = beta[0] + beta[1] * x[i] + (0..p).map(|j| beta[2 + j] * z[(i, j)]).sum::<f64>();
                        let prob = 1.0 / (1.0 + libm::exp(-eta));
                        f64::from(u8::from(rng.next_f64() < prob))
                    })
                    .collect()
            }
        };
        let errors = self.error.sampler()?;
        let (observed, validation) = match &self.measurement {
            MeasurementDesign::Replicates { k } => {
                let mut xs = Matrix::zeros(n, *k);
                for j in 0..*k {
                    let mut rng = root.derive(3).derive(j as u64);
                    for i in 0..n {
                        xs[(i, j)] = x[i] + errors.draw(&mut rng);
                    }
                }
                (ObservedData::new(y, xs, z)?, None)
            }
            MeasurementDesign::Validation { flavor, .. } => {
                let mut rng = root.derive(3).derive(0);
                let x_star: Vec<f64> = x.iter().map(|xi| xi + errors.draw(&mut rng)).collect();
                let n1 = self.validation_size();
                let pairs = match flavor {
                    ValidationFlavor::Internal => {
                        ValidationPairs::new(x[..n1].to_vec(), x_star[..n1].to_vec(), *flavor)?
                    }
                    ValidationFlavor::External => {
                        let xv = self.x.sample(n1, &mut root.derive(4))?;
                        let mut rng = root.derive(5);
                        let sv = xv.iter().map(|xi| xi + errors.draw(&mut rng)).collect();
                        ValidationPairs::new(xv, sv, *flavor)?
                    }
                };
                (ObservedData::single_proxy(y, x_star, z)?, Some(pairs))
            }
        };
        Ok(GeneratedData {
            x_true: x,
            observed,
            validation,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedData {
    pub x_true: Vec<f64>,
    pub observed: ObservedData,
    pub validation: Option<ValidationPairs>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalSource {
    Bootstrap,
    Variance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub source: IntervalSource,
    pub level: f64,
    pub intervals: Vec<Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: ScenarioMethod,
    pub estimate: Option<Vec<f64>>,
    pub error: Option<String>,
    /// SIMEX replicates dropped after failed fits.
    pub dropped_replicates: usize,
    pub intervals: Vec<IntervalSet>,
    /// The SIMEX variance estimate came out negative for some coordinate.
    pub negative_variance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub methods: Vec<MethodOutcome>,
}

fn run_method(
    spec: &ScenarioSpec,
    method: ScenarioMethod,
    gen: &GeneratedData,
    prepared: &Result<SimexData>,
    settings: &AnalysisSettings,
    stream: &RandomStream,
) -> MethodOutcome {
    let mut out = MethodOutcome {
        method,
        estimate: None,
        error: None,
        dropped_replicates: 0,
        intervals: Vec::new(),
        negative_variance: false,
    };
    let estimator = spec.estimator();
    let result = (|| -> Result<()> {
        let Some(m) = method.simex_method() else {
            let input = EstimatorInput {
                y: gen.observed.y(),
                x: &gen.x_true,
                z: gen.observed.z(),
            };
            out.estimate = Some(estimator.estimate(&input, false)?.theta);
            return Ok(());
        };
        let data = prepared.as_ref().map_err(Clone::clone)?;
        let analysis = analyze_prepared(&Sequential, m, data, &estimator, settings, &stream.derive(0))?;
        if let Some(s) = &analysis.simex {
            out.dropped_replicates = s.trace.points.iter().map(|p| p.failures).sum();
            if let (Some(v), Method::Nonparametric) = (&spec.variance, m) {
                let report = simex_variance(&s.trace, v.extrapolant)?;
                out.negative_variance = report.any_negative();
                for &level in &v.levels {
                    // Negative variances give no interval; the rep then has no coverage entry.
                    if let Ok(iv) = variance_intervals(&analysis.estimate, &report, level) {
                        out.intervals.push(IntervalSet {
                            source: IntervalSource::Variance,
                            level,
                            intervals: iv,
                        });
                    }
                }
            }
        }
        if let Some(b) = &spec.bootstrap {
            let boot = bootstrap_method(
                &Sequential,
                m,
                &gen.observed,
                gen.validation.as_ref(),
                &estimator,
                settings,
                &analysis.estimate,
                b,
                &stream.derive(1),
            )?;
            out.intervals.push(IntervalSet {
                source: IntervalSource::Bootstrap,
                level: b.level(),
                intervals: boot.intervals,
            });
        }
        out.estimate = Some(analysis.estimate);
        Ok(())
    })();
    if let Err(e) = result {
        out.estimate = None;
        out.intervals.clear();
        out.error = Some(e.to_string());
    }
    out
}

/// Generate replication `rep` and run every requested method on it.
pub fn run_replication(spec: &ScenarioSpec, rep: usize) -> Result<RepOutcome> {
    let gen = spec.generate(rep)?;
    let settings = spec.simex.analysis(spec.variance.is_some());
    let prepared = SimexData::prepare(&gen.observed, gen.validation.as_ref(), None);
    let root = RandomStream::new(spec.seed).derive(rep as u64).derive(1);
    let methods = spec
        .methods
        .iter()
        .map(|&m| run_method(spec, m, &gen, &prepared, &settings, &root.derive(m.code())))
        .collect();
    Ok(RepOutcome { rep, methods })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageMetric {
    pub source: IntervalSource,
    pub level: f64,
    pub coverage: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateMetrics {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub median: f64,
    pub bias: f64,
    pub mean_abs_error: f64,
    pub mse: f64,
    /// MSE over the truth method's MSE, when the truth method ran.
    pub relative_mse: Option<f64>,
    pub coverage: Vec<CoverageMetric>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: ScenarioMethod,
    /// False when more than 10% of replications failed.
    pub valid: bool,
    pub succeeded: usize,
    pub failed: usize,
    pub dropped_replicates: usize,
    pub negative_variance_reps: usize,
    /// Distinct failure messages with their counts.
    pub failure_messages: Vec<(String, usize)>,
    pub coordinates: Vec<CoordinateMetrics>,
}

impl MethodMetrics {
    pub fn coordinate(&self, name: &str) -> Option<&CoordinateMetrics> {
        self.coordinates.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: ScenarioSpec,
    pub truth: Vec<f64>,
    pub methods: Vec<MethodMetrics>,
}

impl MetricsReport {
    pub fn method(&self, m: ScenarioMethod) -> Option<&MethodMetrics> {
        self.methods.iter().find(|x| x.method == m)
    }
}

/// Per-method summaries over replications.
pub fn aggregate(spec: &ScenarioSpec, outcomes: &[RepOutcome]) -> Result<MetricsReport> {
    let truth = spec.truth();
    let names = spec.coordinate_names();
    let mut methods = Vec::with_capacity(spec.methods.len());
    for (mi, &method) in spec.methods.iter().enumerate() {
        let outs: Vec<&MethodOutcome> = outcomes.iter().map(|o| &o.methods[mi]).collect();
        let estimates: Vec<&Vec<f64>> = outs.iter().filter_map(|o| o.estimate.as_ref()).collect();
        let failed = outs.len() - estimates.len();
        let mut failure_messages: Vec<(String, usize)> = Vec::new();
        for msg in outs.iter().filter_map(|o| o.error.as_ref()) {
            match failure_messages.iter_mut().find(|(m, _)| m == msg) {
                Some(entry) => entry.1 += 1,
                None => failure_messages.push((msg.clone(), 1)),
            }
        }
        let mut coordinates = Vec::new();
        if !estimates.is_empty() {
            for (j, name) in names.iter().enumerate() {
                let col: Vec<f64> = estimates.iter().map(|e| e[j]).collect();
                let mut coverage = Vec::new();
                let mut keys: Vec<(IntervalSource, u64)> = outs
                    .iter()
                    .flat_map(|o| o.intervals.iter().map(|s| (s.source, s.level.to_bits())))
                    .collect();
                keys.sort();
                keys.dedup();
                for (source, bits) in keys {
                    let ivs: Vec<Interval> = outs
                        .iter()
                        .flat_map(|o| o.intervals.iter())
                        .filter(|s| s.source == source && s.level.to_bits() == bits)
                        .map(|s| s.intervals[j])
                        .collect();
                    coverage.push(CoverageMetric {
                        source,
                        level: f64::from_bits(bits),
                        coverage: compute_coverage(&ivs, truth[j])?,
                        count: ivs.len(),
                    });
                }
                coordinates.push(CoordinateMetrics {
                    name: name.clone(),
                    truth: truth[j],
                    mean: mean(&col)?,
                    median: median(&col)?,
                    bias: bias(&col, truth[j])?,
                    mean_abs_error: col.iter().map(|e| (e - truth[j]).abs()).sum::<f64>() / col.len() as f64,
                    mse: compute_mse(&col, truth[j])?,
                    relative_mse: None,
                    coverage,
                });
            }
        }
        methods.push(MethodMetrics {
            method,
            valid: !estimates.is_empty() && failed as f64 <= 0.1 * outs.len() as f64,
            succeeded: estimates.len(),
            failed,
            dropped_replicates: outs.iter().map(|o| o.dropped_replicates).sum(),
            negative_variance_reps: outs.iter().filter(|o| o.negative_variance).count(),
            failure_messages,
            coordinates,
        });
    }
    let truth_mse: Option<Vec<f64>> = methods
        .iter()
        .find(|m| m.method == ScenarioMethod::Truth && m.valid)
        .map(|m| m.coordinates.iter().map(|c| c.mse).collect());
    if let Some(tm) = truth_mse {
        for m in &mut methods {
            for (c, t) in m.coordinates.iter_mut().zip(&tm) {
                c.relative_mse = if *t > 0.0 {
                    Some(c.mse / t)
                } else if c.mse == 0.0 {
                    Some(1.0)
                } else {
                    None
                };
            }
        }
    }
    Ok(MetricsReport {
        scenario: spec.clone(),
        truth,
        methods,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun {
    pub report: MetricsReport,
    pub outcomes: Vec<RepOutcome>,
}

pub fn run_scenario_with<P: Parallelism>(par: &P, spec: &ScenarioSpec) -> Result<ScenarioRun> {
    spec.validate()?;
    let outcomes = par
        .map(spec.reps, |rep| run_replication(spec, rep))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioRun {
        report: aggregate(spec, &outcomes)?,
        outcomes,
    })
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioRun> {
    run_scenario_with(&Sequential, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(measurement: MeasurementDesign) -> ScenarioSpec {
        ScenarioSpec {
            name: "small".into(),
            description: String::new(),
            n: 300,
            reps: 4,
            seed: 11,
            x: DistributionSpec::Normal {
                mean: 1.0,
                variance: 2.0,
            },
            z: vec![],
            outcome: OutcomeModel::Logistic { beta: vec![1.0, -1.0] },
            error: DistributionSpec::Normal {
                mean: 0.0,
                variance: 0.5,
            },
            measurement,
            methods: vec![
                ScenarioMethod::Truth,
                ScenarioMethod::Naive,
                ScenarioMethod::Parametric,
                ScenarioMethod::Nonparametric,
            ],
            simex: SimexSettings::new(10, ExtrapolantKind::Quadratic),
            bootstrap: None,
            variance: None,
        }
    }

    #[test]
    fn replicate_design_shapes() {
        let spec = small(MeasurementDesign::Replicates { k: 3 });
        let g = spec.generate(0).unwrap();
        assert_eq!(g.observed.k(), 3);
        assert_eq!(g.observed.n(), 300);
        assert!(g.validation.is_none());
        assert!(g.observed.y().iter().all(|&y| y == 0.0 || y == 1.0));
        assert_eq!(spec.generate(0).unwrap(), g);
        assert_ne!(spec.generate(1).unwrap(), g);
    }

    #[test]
    fn validation_design_shapes() {
        let spec = small(MeasurementDesign::Validation {
            fraction: 0.1,
            flavor: ValidationFlavor::Internal,
        });
        let g = spec.generate(2).unwrap();
        let v = g.validation.unwrap();
        assert_eq!(v.len(), 30);
        assert_eq!(v.x_true(), &g.x_true[..30]);
        assert_eq!(v.x_star(), &g.observed.x_star().column(0)[..30]);
    }

    #[test]
    fn zero_error_naive_matches_truth() {
        let mut spec = small(MeasurementDesign::Replicates { k: 2 });
        spec.error = DistributionSpec::Normal {
            mean: 0.0,
            variance: 0.0,
        };
        spec.methods = vec![ScenarioMethod::Naive, ScenarioMethod::Truth];
        let run = run_scenario(&spec).unwrap();
        for o in &run.outcomes {
            assert_eq!(o.methods[0].estimate, o.methods[1].estimate);
        }
        let naive = run.report.method(ScenarioMethod::Naive).unwrap();
        let truth = run.report.method(ScenarioMethod::Truth).unwrap();
        for (a, b) in naive.coordinates.iter().zip(&truth.coordinates) {
            assert_eq!(a.mse, b.mse);
            assert_eq!(a.relative_mse, Some(1.0));
            assert_eq!(b.relative_mse, Some(1.0));
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = small(MeasurementDesign::Validation {
            fraction: 0.0,
            flavor: ValidationFlavor::Internal,
        });
        assert!(spec.validate().is_err());
        spec.measurement = MeasurementDesign::Replicates { k: 1 };
        assert!(spec.validate().is_err());
        spec.measurement = MeasurementDesign::Replicates { k: 2 };
        assert!(spec.validate().is_ok());
        spec.outcome = OutcomeModel::Logistic { beta: vec![1.0] };
        assert!(spec.validate().is_err());
        spec.outcome = OutcomeModel::Logistic { beta: vec![1.0, -1.0] };
        spec.methods.push(ScenarioMethod::Naive);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn report_is_deterministic() {
        let spec = small(MeasurementDesign::Replicates { k: 2 });
        assert_eq!(run_scenario(&spec).unwrap(), run_scenario(&spec).unwrap());
    }
}
