//! Measurement-error correction of a user-supplied dataset.

use serde::{Deserialize, Serialize};
use simex_core::analysis::{analyze_prepared, bootstrap_method, MethodAnalysis};
use simex_core::data::{Contrast, ErrorSummary, ObservedData, Provenance, ValidationFlavor, ValidationPairs};
use simex_core::estimators::{Estimator, EstimatorSpec};
use simex_core::extrapolant::{ExtrapolantFit, ExtrapolantKind};
use simex_core::scenario::SimexSettings;
use simex_core::simex::{Method, SimexData, SimexResult};
use simex_core::uncertainty::{simex_variance, BootstrapSpec, Interval, VarianceReport};
use simex_core::RandomStream;

use crate::builtins::DEFAULT_SEED;
use crate::error::{CliError, CliResult};
use crate::harness::{unix_now, REPORT_SCHEMA};
use crate::parallel::Threads;

fn default_methods() -> Vec<Method> {
    vec![Method::Naive, Method::Parametric, Method::Nonparametric]
}

fn internal() -> ValidationFlavor {
    ValidationFlavor::Internal
}

fn quadratic() -> ExtrapolantKind {
    ExtrapolantKind::Quadratic
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceOptions {
    #[serde(default = "quadratic")]
    pub extrapolant: ExtrapolantKind,
}

/// Analysis config for `correct`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectConfig {
    pub estimator: EstimatorSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub simex: SimexSettings,
    #[serde(default)]
    pub contrast: Option<Contrast>,
    #[serde(default = "internal")]
    pub validation_flavor: ValidationFlavor,
    /// SIMEX variance estimate for NP-SIMEX.
    #[serde(default)]
    pub variance: Option<VarianceOptions>,
    #[serde(default)]
    pub bootstrap: Option<BootstrapSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub provenance: Provenance,
    pub summary: ErrorSummary,
    /// Per-measurement error variance used by P-SIMEX.
    pub sigma2_hat: Option<f64>,
    pub sigma_u: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateResult {
    pub name: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error_model: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error_bootstrap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_bootstrap: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error_simex: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub coordinates: Vec<CoordinateResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub extrapolants: Vec<ExtrapolantFit>,
    pub dropped_replicates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_failures: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataShape {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub validation_rows: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub schema: String,
    pub kind: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    pub seed: u64,
    pub config: CorrectConfig,
    pub data: DataShape,
    pub error: Option<ErrorReport>,
    pub methods: Vec<MethodResult>,
}

/// The report plus what the exports need.
pub struct Correction {
    pub report: CorrectionReport,
    pub traces: Vec<(Method, SimexResult)>,
    pub prepared: SimexData,
    pub coordinate_names: Vec<String>,
}

fn sample_sd(v: &[f64]) -> f64 {
    simex_core::uncertainty::sample_variance(v).sqrt()
}

fn error_report(data: &SimexData, validation: Option<&ValidationPairs>) -> Option<ErrorReport> {
    let set = data.error_set.as_ref()?;
    let summary = set.summary();
    let (sigma_u, sigma_x) = match validation {
        Some(v) => (Some(summary.sd), Some(sample_sd(v.x_true()))),
        None => {
            let s2 = data.sigma2?;
            let var_x = simex_core::uncertainty::sample_variance(&data.proxy) - s2 * data.proxy_variance_factor;
            (Some(s2.sqrt()), (var_x > 0.0).then(|| var_x.sqrt()))
        }
    };
    Some(ErrorReport {
        provenance: set.provenance().clone(),
        summary,
        sigma2_hat: data.sigma2,
        sigma_u,
        sigma_x,
        sigma_ratio: sigma_u.zip(sigma_x).map(|(u, x)| u / x),
    })
}

fn method_code(m: Method) -> u64 {
    match m {
        Method::Naive => 0,
        Method::Parametric => 1,
        Method::Nonparametric => 2,
    }
}

pub fn run_correction(
    config: &CorrectConfig,
    data: &ObservedData,
    validation: Option<&ValidationPairs>,
    seed: Option<u64>,
    workers: usize,
    reproducible: bool,
) -> CliResult<Correction> {
    if config.methods.is_empty() {
        return Err(CliError::Config("no methods requested".into()));
    }
    let seed = seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let par = Threads::new(workers);
    let mut settings = config.simex.analysis(config.variance.is_some());
    settings.contrast = config.contrast.clone();
    let prepared = SimexData::prepare(data, validation, settings.contrast.as_ref())?;
    let estimator = config.estimator;
    let names = estimator.coordinate_names(data.p());
    let root = RandomStream::new(seed);

    let mut methods = Vec::new();
    let mut traces = Vec::new();
    for &m in &config.methods {
        let code = method_code(m);
        let mut naive_settings = settings.clone();
        naive_settings.nonparametric.with_variance = m == Method::Naive;
        let s = if m == Method::Naive { &naive_settings } else { &settings };
        let MethodAnalysis {
            estimate,
            covariance,
            simex,
            ..
        } = analyze_prepared(&par, m, &prepared, &estimator, s, &root.derive(code))?;
        let mut coords: Vec<CoordinateResult> = names
            .iter()
            .zip(&estimate)
            .enumerate()
            .map(|(j, (name, e))| CoordinateResult {
                name: name.clone(),
                estimate: *e,
                std_error_model: covariance.as_ref().map(|c| c[(j, j)].sqrt()),
                std_error_bootstrap: None,
                interval_bootstrap: None,
                std_error_simex: None,
            })
            .collect();
        let mut result = MethodResult {
            method: m,
            coordinates: Vec::new(),
            extrapolants: Vec::new(),
            dropped_replicates: 0,
            noise_variance: None,
            bootstrap_failures: None,
            variance: None,
        };
        if let Some(sim) = &simex {
            result.extrapolants = sim.fits.clone();
            result.dropped_replicates = sim.trace.points.iter().map(|p| p.failures).sum();
            result.noise_variance = sim.noise_variance;
            if let (Some(v), Method::Nonparametric) = (&config.variance, m) {
                let report = simex_variance(&sim.trace, v.extrapolant)?;
                for (c, cv) in coords.iter_mut().zip(&report.coordinates) {
                    c.std_error_simex = (cv.var_npsimex_hat >= 0.0).then(|| cv.var_npsimex_hat.sqrt());
                }
                result.variance = Some(report);
            }
        }
        if let Some(spec) = &config.bootstrap {
            let boot = bootstrap_method(
                &par,
                m,
                data,
                validation,
                &estimator,
                &settings,
                &estimate,
                spec,
                &root.derive(10 + code),
            )?;
            for (j, c) in coords.iter_mut().enumerate() {
                c.std_error_bootstrap = Some(boot.std_errors[j]);
                c.interval_bootstrap = Some(boot.intervals[j]);
            }
            result.bootstrap_failures = Some(boot.failures);
        }
        result.coordinates = coords;
        methods.push(result);
        if let Some(sim) = simex {
            traces.push((m, sim));
        }
    }

    let report = CorrectionReport {
        schema: REPORT_SCHEMA.into(),
        kind: "correction".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        generated_at_unix: (!reproducible).then(unix_now),
        seed,
        config: config.clone(),
        data: DataShape {
            n: data.n(),
            k: data.k(),
            p: data.p(),
            validation_rows: validation.map(ValidationPairs::len),
        },
        error: error_report(&prepared, validation),
        methods,
    };
    Ok(Correction {
        report,
        traces,
        prepared,
        coordinate_names: names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use simex_core::linalg::Matrix;

    fn config() -> CorrectConfig {
        toml::from_str(
            r#"
            estimator = { kind = "fourth_moment" }
            [simex]
            replicates = 20
            extrapolant = "quadratic"
            "#,
        )
        .unwrap()
    }

    #[test]
    fn zero_error_validation_gives_identical_estimates() {
        let x: Vec<f64> = (0..200).map(|i| 3.0 + (i as f64 * 0.7).sin()).collect();
        let data = ObservedData::single_proxy(vec![0.0; 200], x.clone(), Matrix::empty(200)).unwrap();
        let v = ValidationPairs::new(x[..40].to_vec(), x[..40].to_vec(), ValidationFlavor::Internal).unwrap();
        let out = run_correction(&config(), &data, Some(&v), Some(1), 1, true).unwrap();
        let est: Vec<f64> = out.report.methods.iter().map(|m| m.coordinates[0].estimate).collect();
        assert_eq!(est.len(), 3);
        assert!(est.iter().all(|e| *e == est[0]), "{est:?}");
    }

    #[test]
    fn np_without_error_information_is_a_config_error() {
        let data = ObservedData::single_proxy(vec![0.0; 10], vec![1.0; 10], Matrix::empty(10)).unwrap();
        let mut cfg = config();
        cfg.methods = vec![Method::Nonparametric];
        let err = run_correction(&cfg, &data, None, None, 1, true).err().unwrap();
        assert_eq!(err.exit_code(), 2, "{err}");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg: CorrectConfig = toml::from_str(
            r#"
            estimator = { kind = "logistic" }
            methods = ["naive", "NP"]
            contrast = [0.25, 0.25, -0.5]
            seed = 4
            [simex]
            replicates = 50
            extrapolant = "rational"
            parametric_extrapolant = "quadratic"
            nonparametric_grid = { mode = "nonparametric", values = [0, 1, 2, 3] }
            [bootstrap]
            n_boot = 200
            level = 0.9
            [variance]
            "#,
        )
        .unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: CorrectConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
