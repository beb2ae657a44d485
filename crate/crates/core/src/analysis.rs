//! A complete analysis of one observed dataset by one method.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::data::{Contrast, ObservedData, ValidationPairs};
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::linalg::Matrix;
use crate::parallel::{Parallelism, Sequential};
use crate::rng::RandomStream;
use crate::simex::{naive_estimate, run_simex_with, Method, SimexConfig, SimexData, SimexResult};
use crate::uncertainty::{bootstrap_ci, BootstrapOutcome, BootstrapSpec};

/// SIMEX configuration for each method plus the replicate contrast.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub parametric: SimexConfig,
    pub nonparametric: SimexConfig,
    /// Replicate contrast; the balanced default for `k` when absent.
    #[serde(default)]
    pub contrast: Option<Contrast>,
}

impl AnalysisSettings {
    pub fn config(&self, method: Method) -> Option<&SimexConfig> {
        match method {
            Method::Naive => None,
            Method::Parametric => Some(&self.parametric),
            Method::Nonparametric => Some(&self.nonparametric),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.parametric.method != Method::Parametric || self.nonparametric.method != Method::Nonparametric {
            return Err(Error::Config("method settings are mislabelled".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodAnalysis {
    pub method: Method,
    pub estimate: Vec<f64>,
    /// Model-based covariance of the naive fit.
    pub covariance: Option<Matrix>,
    pub simex: Option<SimexResult>,
}

pub fn analyze_prepared<P: Parallelism>(
    par: &P,
    method: Method,
    data: &SimexData,
    estimator: &impl Estimator,
    settings: &AnalysisSettings,
    stream: &RandomStream,
) -> Result<MethodAnalysis> {
    match settings.config(method) {
        None => {
            let with_variance = settings.nonparametric.with_variance;
            let est = naive_estimate(data, estimator, with_variance)?;
            Ok(MethodAnalysis {
                method,
                estimate: est.theta,
                covariance: est.covariance,
                simex: None,
            })
        }
        Some(cfg) => {
            let res = run_simex_with(par, data, estimator, cfg, stream)?;
            Ok(MethodAnalysis {
                method,
                estimate: res.corrected.clone(),
                covariance: None,
                simex: Some(res),
            })
        }
    }
}

pub fn analyze(
    method: Method,
    data: &ObservedData,
    validation: Option<&ValidationPairs>,
    estimator: &impl Estimator,
    settings: &AnalysisSettings,
    stream: &RandomStream,
) -> Result<MethodAnalysis> {
    let prepared = SimexData::prepare(data, validation, settings.contrast.as_ref())?;
    analyze_prepared(&Sequential, method, &prepared, estimator, settings, stream)
}

/// Bootstrap `method` by resampling the main sample and, separately, the
/// validation sample, rerunning the full analysis on each resample.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_method<P: Parallelism>(
    par: &P,
    method: Method,
    data: &ObservedData,
    validation: Option<&ValidationPairs>,
    estimator: &impl Estimator,
    settings: &AnalysisSettings,
    point: &[f64],
    spec: &BootstrapSpec,
    stream: &RandomStream,
) -> Result<BootstrapOutcome> {
    let mut quiet = settings.clone();
    quiet.parametric.with_variance = false;
    quiet.nonparametric.with_variance = false;
    let mut strata = Vec::with_capacity(2);
    strata.push(data.n());
    if let Some(v) = validation {
        strata.push(v.len());
    }
    bootstrap_ci(par, &strata, point, spec, stream, |idx, rng| {
        let d = data.select_rows(&idx[0]);
        let v = validation.map(|v| v.select_rows(&idx[1]));
        let run = rng.derive(0);
        Ok(analyze(method, &d, v.as_ref(), estimator, &quiet, &run)?.estimate)
    })
}
