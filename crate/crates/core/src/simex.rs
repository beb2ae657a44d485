//! Simulation and extrapolation.
//!
//! For each grid point `λ > 0` and replicate `b`, extra error is injected into
//! the proxy, the estimator is refitted and the `B` fits are averaged. Each
//! coordinate of the averaged trace is then extrapolated to `λ = -1`.
//!
//! * Parametric (P): `x̃ + √λ · σ · ν`, `ν ~ N(0, 1)`, where `σ²` is the error
//!   variance of the proxy `x̃`.
//! * Nonparametric (NP): `x̃ + Σ_{j=1}^{λ} U*_j`, the `U*_j` drawn with
//!   replacement from the empirical error set; `λ` must be an integer.
//!
//! At `λ = 0` remeasurement is the identity, so the estimator is evaluated
//! once on the unmodified proxy.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::data::{
    contrast_for, error_set_from_replicates, error_set_from_validation, estimate_error_variance, Contrast,
    ErrorSet, ObservedData, ValidationPairs,
};
use crate::distributions::standard_normal;
use crate::error::{Error, Result};
use crate::estimators::{Estimate, Estimator, EstimatorInput};
use crate::extrapolant::{fit_extrapolant, ExtrapolantFit, ExtrapolantKind};
use crate::linalg::Matrix;
use crate::parallel::{Parallelism, Sequential};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "P", alias = "p")]
    Parametric,
    #[serde(rename = "NP", alias = "np")]
    Nonparametric,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Parametric => "P",
            Self::Nonparametric => "NP",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    Parametric,
    Nonparametric,
}

/// Sorted, distinct, non-negative λ values including 0; at least three.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct LambdaGrid {
    mode: GridMode,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    mode: GridMode,
    values: Vec<f64>,
}

impl TryFrom<GridRepr> for LambdaGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Self::new(r.mode, r.values)
    }
}

impl From<LambdaGrid> for GridRepr {
    fn from(g: LambdaGrid) -> Self {
        GridRepr {
            mode: g.mode,
            values: g.values,
        }
    }
}

impl LambdaGrid {
    pub fn new(mode: GridMode, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidGrid("at least three grid points are required"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGrid("grid values must be finite and non-negative"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("grid values must be strictly increasing"));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must include 0"));
        }
        if mode == GridMode::Nonparametric && values.iter().any(|v| libm::trunc(*v) != *v) {
            return Err(Error::InvalidGrid("nonparametric grid values must be integers"));
        }
        Ok(Self { mode, values })
    }

    /// `m` equally spaced points on `[0, max]`.
    pub fn parametric(max: f64, m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidGrid("at least three grid points are required"));
        }
        let values = (0..m).map(|i| max * i as f64 / (m - 1) as f64).collect();
        Self::new(GridMode::Parametric, values)
    }

    /// `{0, 1, …, m - 1}`.
    pub fn nonparametric(m: usize) -> Result<Self> {
        Self::new(GridMode::Nonparametric, (0..m).map(|i| i as f64).collect())
    }

    pub fn parametric_default() -> Self {
        Self::parametric(2.0, 10).expect("valid default grid")
    }

    pub fn nonparametric_default() -> Self {
        Self::nonparametric(10).expect("valid default grid")
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::NegativeLambda(lambda));
    }
    Ok(())
}

/// `out_i = x_i + √λ · sd · ν_i`.
pub fn psimex_remeasure_into(out: &mut [f64], x: &[f64], sd: f64, lambda: f64, rng: &mut RandomStream) -> Result<()> {
    check_lambda(lambda)?;
    if out.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: out.len(),
        });
    }
    if !(sd >= 0.0) {
        return Err(Error::InvalidDistribution("noise sd must be non-negative"));
    }
    let scale = libm::sqrt(lambda) * sd;
    if scale == 0.0 {
        out.copy_from_slice(x);
        return Ok(());
    }
    for (o, xi) in out.iter_mut().zip(x) {
        *o = xi + scale * standard_normal(rng);
    }
    Ok(())
}

pub fn psimex_remeasure(x: &[f64], sd: f64, lambda: f64, rng: &mut RandomStream) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    psimex_remeasure_into(&mut out, x, sd, lambda, rng)?;
    Ok(out)
}

/// `out_i = x_i + Σ_{j=1}^{λ} U*_{ij}` with `U*` uniform over the error set.
pub fn npsimex_remeasure_into(
    out: &mut [f64],
    x: &[f64],
    errors: &ErrorSet,
    lambda: f64,
    rng: &mut RandomStream,
) -> Result<()> {
    check_lambda(lambda)?;
    if libm::trunc(lambda) != lambda {
        return Err(Error::NonIntegerLambda(lambda));
    }
    if errors.is_empty() {
        return Err(Error::EmptyErrorSet);
    }
    if out.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: out.len(),
        });
    }
    let draws = lambda as usize;
    let values = errors.values();
    let m = values.len();
    for (o, xi) in out.iter_mut().zip(x) {
        let mut acc = *xi;
        for _ in 0..draws {
            acc += values[rng.uniform_index(m)];
        }
        *o = acc;
    }
    Ok(())
}

pub fn npsimex_remeasure(x: &[f64], errors: &ErrorSet, lambda: f64, rng: &mut RandomStream) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    npsimex_remeasure_into(&mut out, x, errors, lambda, rng)?;
    Ok(out)
}

/// Data after the error set has been formed: the outcome, the proxy used
/// in place of `X`, the error-free covariates and what is known about the error.
#[derive(Clone, Debug, PartialEq)]
pub struct SimexData {
    pub y: Vec<f64>,
    pub proxy: Vec<f64>,
    pub z: Matrix,
    pub error_set: Option<ErrorSet>,
    /// Estimated per-measurement error variance `σ_U²`.
    pub sigma2: Option<f64>,
    /// Factor turning `σ_U²` into the proxy's error variance (`Σa²` for a
    /// replicate contrast, 1 for a single proxy).
    pub proxy_variance_factor: f64,
}

impl SimexData {
    /// Form the proxy and error set from replicates (default contrast when
    /// `contrast` is `None`) or from validation pairs with a single proxy.
    pub fn prepare(
        data: &ObservedData,
        validation: Option<&ValidationPairs>,
        contrast: Option<&Contrast>,
    ) -> Result<Self> {
        let y = data.y().to_vec();
        let z = data.z().clone();
        if let Some(v) = validation {
            if data.k() != 1 {
                return Err(Error::Config(format!(
                    "validation mode expects a single proxy column, found {}",
                    data.k()
                )));
            }
            return Ok(Self {
                y,
                proxy: data.x_star().column(0),
                z,
                error_set: Some(error_set_from_validation(v)),
                sigma2: Some(estimate_error_variance(data, Some(v))?),
                proxy_variance_factor: 1.0,
            });
        }
        if data.k() == 1 {
            return Ok(Self {
                y,
                proxy: data.x_star().column(0),
                z,
                error_set: None,
                sigma2: None,
                proxy_variance_factor: 1.0,
            });
        }
        let default;
        let contrast = match contrast {
            Some(c) => c,
            None => {
                default = contrast_for(data.k())?;
                &default
            }
        };
        let (proxy, errors) = error_set_from_replicates(data.x_star(), contrast)?;
        Ok(Self {
            y,
            proxy,
            z,
            error_set: Some(errors),
            sigma2: Some(estimate_error_variance(data, None)?),
            proxy_variance_factor: contrast.sum_of_squares(),
        })
    }

    pub fn input(&self) -> EstimatorInput<'_> {
        EstimatorInput {
            y: &self.y,
            x: &self.proxy,
            z: &self.z,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

fn default_max_failure_fraction() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimexConfig {
    pub method: Method,
    pub grid: LambdaGrid,
    pub replicates: usize,
    pub extrapolant: ExtrapolantKind,
    /// Known per-measurement `σ_U²` for P-SIMEX, replacing the estimate.
    #[serde(default)]
    pub known_sigma2: Option<f64>,
    /// Retain per-fit variance estimates for SIMEX variance estimation.
    #[serde(default)]
    pub with_variance: bool,
    #[serde(default = "default_max_failure_fraction")]
    pub max_failure_fraction: f64,
}

impl SimexConfig {
    pub fn new(method: Method, grid: LambdaGrid, replicates: usize, extrapolant: ExtrapolantKind) -> Self {
        Self {
            method,
            grid,
            replicates,
            extrapolant,
            known_sigma2: None,
            with_variance: false,
            max_failure_fraction: default_max_failure_fraction(),
        }
    }

    pub fn nonparametric(replicates: usize, extrapolant: ExtrapolantKind) -> Self {
        Self::new(
            Method::Nonparametric,
            LambdaGrid::nonparametric_default(),
            replicates,
            extrapolant,
        )
    }

    pub fn parametric(replicates: usize, extrapolant: ExtrapolantKind) -> Self {
        Self::new(Method::Parametric, LambdaGrid::parametric_default(), replicates, extrapolant)
    }
}

/// Estimates retained at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub lambda: f64,
    /// Successful fits, one `d`-vector per retained replicate.
    pub estimates: Vec<Vec<f64>>,
    /// Diagonal of each fit's covariance estimate, parallel to `estimates`.
    pub variances: Option<Vec<Vec<f64>>>,
    pub failures: usize,
    /// Coordinate-wise mean over `estimates`.
    pub mean: Vec<f64>,
}

impl TracePoint {
    pub fn retained(&self) -> usize {
        self.estimates.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimexTrace {
    pub replicates: usize,
    pub points: Vec<TracePoint>,
}

impl SimexTrace {
    /// `(λ, θ̂_j(λ))` for coordinate `j`.
    pub fn coordinate(&self, j: usize) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.lambda, p.mean[j])).collect()
    }

    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, |p| p.mean.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimexResult {
    pub method: Method,
    /// `G(-1)` per coordinate.
    pub corrected: Vec<f64>,
    pub trace: SimexTrace,
    pub fits: Vec<ExtrapolantFit>,
    pub config: SimexConfig,
    pub seed: u64,
    /// Variance of the injected Gaussian noise per unit λ (P-SIMEX only).
    pub noise_variance: Option<f64>,
}

impl SimexResult {
    /// The estimate at `λ = 0`, i.e. the naive estimate.
    pub fn naive(&self) -> &[f64] {
        &self.trace.points[0].mean
    }
}

fn mean_rows(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    // Running mean: exact when all rows are equal.
    let mut m = vec![0.0; d];
    for (k, r) in rows.iter().enumerate() {
        for (acc, v) in m.iter_mut().zip(r) {
            *acc += (v - *acc) / (k + 1) as f64;
        }
    }
    m
}

/// The estimator applied to the proxy, ignoring measurement error.
pub fn naive_estimate(data: &SimexData, estimator: &impl Estimator, with_variance: bool) -> Result<Estimate> {
    estimator.estimate(&data.input(), with_variance)
}

pub fn run_simex(
    data: &SimexData,
    estimator: &impl Estimator,
    config: &SimexConfig,
    stream: &RandomStream,
) -> Result<SimexResult> {
    run_simex_with(&Sequential, data, estimator, config, stream)
}

enum Noise<'a> {
    Gaussian { sd: f64 },
    Empirical(&'a ErrorSet),
}

/// [`run_simex`] with the `(λ, b)` fits distributed by `par`. Task `(i, b)`
/// uses stream `stream.derive(i).derive(b)`, so output is identical for any
/// strategy.
pub fn run_simex_with(
    par: &impl Parallelism,
    data: &SimexData,
    estimator: &impl Estimator,
    config: &SimexConfig,
    stream: &RandomStream,
) -> Result<SimexResult> {
    if config.replicates == 0 {
        return Err(Error::Config("SIMEX needs at least one replicate".into()));
    }
    let (noise, noise_variance) = match config.method {
        Method::Naive => return Err(Error::Config("naive analysis does not run SIMEX".into())),
        Method::Parametric => {
            if config.grid.mode() != GridMode::Parametric {
                return Err(Error::Config("P-SIMEX needs a parametric grid".into()));
            }
            let sigma2 = config.known_sigma2.or(data.sigma2).ok_or_else(|| {
                Error::Config("P-SIMEX needs replicates, validation data or a known error variance".into())
            })?;
            if !(sigma2 >= 0.0) {
                return Err(Error::Config("error variance must be non-negative".into()));
            }
            let v = sigma2 * data.proxy_variance_factor;
            (Noise::Gaussian { sd: libm::sqrt(v) }, Some(v))
        }
        Method::Nonparametric => {
            if config.grid.mode() != GridMode::Nonparametric {
                return Err(Error::Config("NP-SIMEX needs a nonparametric (integer) grid".into()));
            }
            let e = data.error_set.as_ref().ok_or_else(|| {
                Error::Config("NP-SIMEX needs replicate measurements or validation data".into())
            })?;
            (Noise::Empirical(e), None)
        }
    };

    let d = estimator.dimension(data.z.cols());
    let lambdas = config.grid.values();
    let b_count = config.replicates;

    let anchor = estimator.estimate(&data.input(), config.with_variance)?;
    let mut points = Vec::with_capacity(lambdas.len());
    points.push(TracePoint {
        lambda: 0.0,
        mean: anchor.theta.clone(),
        variances: config
            .with_variance
            .then(|| vec![anchor.covariance.as_ref().map(Matrix::diagonal).unwrap_or_default()]),
        estimates: vec![anchor.theta],
        failures: 0,
    });

    let positive = lambdas.len() - 1;
    let results = par.map(positive * b_count, |task| {
        let (li, b) = (task / b_count + 1, task % b_count);
        let lambda = lambdas[li];
        let mut rng = stream.derive(li as u64).derive(b as u64);
        let mut x = vec![0.0; data.proxy.len()];
        match &noise {
            Noise::Gaussian { sd } => psimex_remeasure_into(&mut x, &data.proxy, *sd, lambda, &mut rng)?,
            Noise::Empirical(e) => npsimex_remeasure_into(&mut x, &data.proxy, e, lambda, &mut rng)?,
        }
        let input = EstimatorInput {
            y: &data.y,
            x: &x,
            z: &data.z,
        };
        estimator.estimate(&input, config.with_variance)
    });

    let mut results = results.into_iter();
    for &lambda in &lambdas[1..] {
        let mut estimates = Vec::with_capacity(b_count);
        let mut variances = Vec::new();
        let mut failures = 0;
        for r in results.by_ref().take(b_count) {
            match r {
                Ok(est) => {
                    if config.with_variance {
                        variances.push(est.covariance.as_ref().map(Matrix::diagonal).unwrap_or_default());
                    }
                    estimates.push(est.theta);
                }
                // Remeasured-fit failures are tolerated up to the threshold.
                Err(Error::Separation { .. } | Error::NoConvergence { .. } | Error::SingularMatrix) => failures += 1,
                Err(e) => return Err(e),
            }
        }
        if estimates.is_empty() || failures as f64 > config.max_failure_fraction * b_count as f64 {
            return Err(Error::ReplicateFailures {
                lambda,
                failed: failures,
                total: b_count,
            });
        }
        points.push(TracePoint {
            lambda,
            mean: mean_rows(&estimates, d),
            estimates,
            variances: config.with_variance.then_some(variances),
            failures,
        });
    }

    let trace = SimexTrace {
        replicates: b_count,
        points,
    };
    let fits = (0..d)
        .map(|j| fit_extrapolant(&trace.coordinate(j), config.extrapolant))
        .collect::<Result<Vec<_>>>()?;
    let corrected = fits.iter().map(ExtrapolantFit::extrapolate).collect();
    Ok(SimexResult {
        method: config.method,
        corrected,
        trace,
        fits,
        config: config.clone(),
        seed: stream.seed(),
        noise_variance,
    })
}
