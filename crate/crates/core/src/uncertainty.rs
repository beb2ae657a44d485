//! Interval and variance estimation for SIMEX estimates.
//!
//! Two routes are offered. [`bootstrap_ci`] resamples the observed rows and
//! reruns the whole analysis, giving bias-corrected (BC) percentile intervals.
//! [`simex_variance`] reuses the per-replicate fits from a single SIMEX run:
//! the average model-based variance is extrapolated to `var_truth`, and
//!
//! ```text
//! Ŝ²(λ) = (B - 1)⁻¹ Σ_b (θ̂_b(λ) - θ̄(λ))²
//! V(λ)  = var_truth - Ŝ²(λ)
//! ```
//!
//! is extrapolated to `λ = -1`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrapolant::{fit_extrapolant, ExtrapolantKind};
use crate::parallel::Parallelism;
use crate::rng::RandomStream;
use crate::simex::SimexTrace;
use crate::special::{normal_cdf, normal_quantile};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    /// Percentile interval shifted by the median bias `z₀`; no acceleration.
    #[default]
    BiasCorrectedPercentile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BootstrapRepr", into = "BootstrapRepr")]
pub struct BootstrapSpec {
    n_boot: usize,
    level: f64,
    method: IntervalMethod,
}

#[derive(Serialize, Deserialize)]
struct BootstrapRepr {
    n_boot: usize,
    level: f64,
    #[serde(default)]
    method: IntervalMethod,
}

impl TryFrom<BootstrapRepr> for BootstrapSpec {
    type Error = Error;
    fn try_from(r: BootstrapRepr) -> Result<Self> {
        Self::new(r.n_boot, r.level)
    }
}

impl From<BootstrapSpec> for BootstrapRepr {
    fn from(s: BootstrapSpec) -> Self {
        Self {
            n_boot: s.n_boot,
            level: s.level,
            method: s.method,
        }
    }
}

impl BootstrapSpec {
    pub fn new(n_boot: usize, level: f64) -> Result<Self> {
        if n_boot < 100 {
            return Err(Error::Config("bootstrap needs at least 100 replicates".into()));
        }
        check_level(level)?;
        Ok(Self {
            n_boot,
            level,
            method: IntervalMethod::BiasCorrectedPercentile,
        })
    }

    pub fn n_boot(&self) -> usize {
        self.n_boot
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn method(&self) -> IntervalMethod {
        self.method
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config("confidence level must lie in (0, 1)".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let iv = Self { lo, hi };
        iv.check()?;
        Ok(iv)
    }

    pub fn check(&self) -> Result<()> {
        if self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::MalformedInterval { lo: self.lo, hi: self.hi })
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// BC percentile interval from bootstrap replicates around `point`.
/// Returns the interval and the bias correction `z₀`.
pub fn bc_interval(replicates: &[f64], point: f64, level: f64) -> Result<(Interval, f64)> {
    check_level(level)?;
    if replicates.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, found: 0 });
    }
    if replicates.iter().any(|v| !v.is_finite()) || !point.is_finite() {
        return Err(Error::InvalidData("non-finite bootstrap replicate".into()));
    }
    let b = replicates.len() as f64;
    let less = replicates.iter().filter(|&&v| v < point).count() as f64;
    let equal = replicates.iter().filter(|&&v| v == point).count() as f64;
    let edge = 0.5 / b;
    let prop = ((less + 0.5 * equal) / b).clamp(edge, 1.0 - edge);
    let z0 = normal_quantile(prop);
    let z = normal_quantile(0.5 + level / 2.0);
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, normal_cdf(2.0 * z0 - z));
    let hi = quantile_sorted(&sorted, normal_cdf(2.0 * z0 + z));
    Ok((Interval::new(lo, hi)?, z0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    pub spec: BootstrapSpec,
    pub intervals: Vec<Interval>,
    pub z0: Vec<f64>,
    /// Bootstrap standard deviation per coordinate.
    pub std_errors: Vec<f64>,
    pub retained: usize,
    pub failures: usize,
}

/// Bootstrap the analysis `procedure` around `point`.
///
/// `strata` gives the row count of each independently resampled stratum
/// (one for replicate data; main and validation samples otherwise). For
/// replicate `r` the procedure receives one index vector per stratum, drawn
/// with replacement, and a stream derived from `stream` by `r`.
pub fn bootstrap_ci<P, F>(
    par: &P,
    strata: &[usize],
    point: &[f64],
    spec: &BootstrapSpec,
    stream: &RandomStream,
    procedure: F,
) -> Result<BootstrapOutcome>
where
    P: Parallelism,
    F: Fn(&[Vec<usize>], &mut RandomStream) -> Result<Vec<f64>> + Sync,
{
    if strata.is_empty() || strata.contains(&0) {
        return Err(Error::Config("bootstrap strata must be non-empty".into()));
    }
    let d = point.len();
    let results = par.map(spec.n_boot, |r| {
        let mut rng = stream.derive(r as u64);
        let idx: Vec<Vec<usize>> = strata
            .iter()
            .map(|&n| (0..n).map(|_| rng.uniform_index(n)).collect())
            .collect();
        let out = procedure(&idx, &mut rng)?;
        if out.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: out.len(),
            });
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite bootstrap estimate".into()));
        }
        Ok(out)
    });
    let mut kept = Vec::with_capacity(spec.n_boot);
    let mut failures = 0;
    for r in results {
        match r {
            Ok(v) => kept.push(v),
            Err(_) => failures += 1,
        }
    }
    if kept.is_empty() || failures as f64 > 0.1 * spec.n_boot as f64 {
        return Err(Error::BootstrapFailures {
            failed: failures,
            total: spec.n_boot,
        });
    }
    let mut intervals = Vec::with_capacity(d);
    let mut z0 = Vec::with_capacity(d);
    let mut std_errors = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = kept.iter().map(|v| v[j]).collect();
        let (iv, z) = bc_interval(&col, point[j], spec.level)?;
        intervals.push(iv);
        z0.push(z);
        std_errors.push(libm::sqrt(sample_variance(&col)));
    }
    Ok(BootstrapOutcome {
        spec: spec.clone(),
        intervals,
        z0,
        std_errors,
        retained: kept.len(),
        failures,
    })
}

/// Two-pass sample variance with divisor `n - 1`; 0 for fewer than two values.
pub fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

/// `θ̂ ± z_{(1+level)/2} · √var`.
pub fn normal_interval(estimate: f64, variance: f64, level: f64) -> Result<Interval> {
    check_level(level)?;
    if !(variance >= 0.0) {
        return Err(Error::InvalidData("interval needs a non-negative variance".into()));
    }
    let half = normal_quantile(0.5 + level / 2.0) * libm::sqrt(variance);
    Interval::new(estimate - half, estimate + half)
}

pub const S_DELTA_FORMULA: &str = "S2(lambda) = sum_b (theta_b(lambda) - mean(lambda))^2 / (B - 1)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateVariance {
    pub var_truth_hat: f64,
    pub s_delta_sq: Vec<f64>,
    pub v_lambda: Vec<f64>,
    pub var_npsimex_hat: f64,
    /// `var_npsimex_hat < 0`; the value is reported unclamped.
    pub negative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub lambdas: Vec<f64>,
    pub extrapolant: ExtrapolantKind,
    pub formula: String,
    pub coordinates: Vec<CoordinateVariance>,
}

impl VarianceReport {
    pub fn any_negative(&self) -> bool {
        self.coordinates.iter().any(|c| c.negative)
    }
}

/// SIMEX variance estimate from a trace that kept per-fit variances.
pub fn simex_variance(trace: &SimexTrace, kind: ExtrapolantKind) -> Result<VarianceReport> {
    if trace.replicates < 2 {
        return Err(Error::Config("variance estimation needs at least two SIMEX replicates".into()));
    }
    let d = trace.dimension();
    let lambdas: Vec<f64> = trace.points.iter().map(|p| p.lambda).collect();
    let mut coordinates = Vec::with_capacity(d);
    for j in 0..d {
        let mut avg_var = Vec::with_capacity(lambdas.len());
        let mut s_delta_sq = Vec::with_capacity(lambdas.len());
        for p in &trace.points {
            let vars = p
                .variances
                .as_ref()
                .ok_or_else(|| Error::Config("trace lacks per-fit variance estimates".into()))?;
            if vars.len() != p.estimates.len() || vars.iter().any(|v| v.len() <= j) {
                return Err(Error::Config("estimator did not report variances".into()));
            }
            let mean_var = vars.iter().map(|v| v[j]).sum::<f64>() / vars.len() as f64;
            avg_var.push((p.lambda, mean_var));
            let col: Vec<f64> = p.estimates.iter().map(|e| e[j]).collect();
            s_delta_sq.push(sample_variance(&col));
        }
        let var_truth_hat = fit_extrapolant(&avg_var, kind)?.extrapolate();
        let v_lambda: Vec<f64> = s_delta_sq.iter().map(|s| var_truth_hat - s).collect();
        let pts: Vec<(f64, f64)> = lambdas.iter().copied().zip(v_lambda.iter().copied()).collect();
        let var_npsimex_hat = fit_extrapolant(&pts, kind)?.extrapolate();
        if !var_truth_hat.is_finite() || !var_npsimex_hat.is_finite() {
            return Err(Error::InvalidData("non-finite variance estimate".into()));
        }
        coordinates.push(CoordinateVariance {
            var_truth_hat,
            s_delta_sq,
            v_lambda,
            var_npsimex_hat,
            negative: var_npsimex_hat < 0.0,
        });
    }
    Ok(VarianceReport {
        lambdas,
        extrapolant: kind,
        formula: S_DELTA_FORMULA.into(),
        coordinates,
    })
}

/// Per-coordinate normal intervals from a variance report.
pub fn variance_intervals(estimates: &[f64], report: &VarianceReport, level: f64) -> Result<Vec<Interval>> {
    estimates
        .iter()
        .zip(&report.coordinates)
        .map(|(e, c)| normal_interval(*e, c.var_npsimex_hat, level))
        .collect()
}

/// Plain percentile interval, for comparison with the BC interval.
pub fn percentile_interval(replicates: &[f64], level: f64) -> Result<Interval> {
    check_level(level)?;
    if replicates.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, found: 0 });
    }
    let mut sorted = vec![0.0; replicates.len()];
    sorted.copy_from_slice(replicates);
    sorted.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    Interval::new(quantile_sorted(&sorted, a), quantile_sorted(&sorted, 1.0 - a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::Sequential;

    #[test]
    fn spec_validation() {
        assert!(BootstrapSpec::new(99, 0.95).is_err());
        assert!(BootstrapSpec::new(100, 1.0).is_err());
        assert!(BootstrapSpec::new(100, 0.0).is_err());
        assert!(BootstrapSpec::new(500, 0.95).is_ok());
    }

    #[test]
    fn type7_quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&s, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn constant_procedure_gives_degenerate_interval() {
        let spec = BootstrapSpec::new(200, 0.95).unwrap();
        let out = bootstrap_ci(&Sequential, &[50], &[7.0], &spec, &RandomStream::new(1), |_, _| Ok(vec![7.0])).unwrap();
        assert_eq!(out.intervals[0], Interval { lo: 7.0, hi: 7.0 });
        assert_eq!(out.z0[0], 0.0);
    }

    #[test]
    fn symmetric_replicates_match_percentile() {
        let reps: Vec<f64> = (0..999).map(|i| i as f64 - 499.0).collect();
        let (bc, z0) = bc_interval(&reps, 0.0, 0.9).unwrap();
        assert_eq!(z0, 0.0);
        let pc = percentile_interval(&reps, 0.9).unwrap();
        assert!((bc.lo - pc.lo).abs() <= 1.0 && (bc.hi - pc.hi).abs() <= 1.0);
    }

    #[test]
    fn bias_correction_shifts_interval() {
        // Point estimate above most replicates: interval moves up.
        let reps: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let (bc, z0) = bc_interval(&reps, 700.0, 0.9).unwrap();
        assert!(z0 > 0.0);
        let pc = percentile_interval(&reps, 0.9).unwrap();
        assert!(bc.lo > pc.lo && bc.hi > pc.hi);
    }

    #[test]
    fn failures_abort_over_threshold() {
        let spec = BootstrapSpec::new(100, 0.95).unwrap();
        let out = bootstrap_ci(&Sequential, &[10], &[0.0], &spec, &RandomStream::new(2), |idx, _| {
            if idx[0][0] < 2 {
                Err(Error::SingularMatrix)
            } else {
                Ok(vec![idx[0][0] as f64])
            }
        });
        assert!(matches!(out, Err(Error::BootstrapFailures { .. })));
    }

    #[test]
    fn strata_preserve_sizes() {
        let spec = BootstrapSpec::new(100, 0.95).unwrap();
        bootstrap_ci(&Sequential, &[30, 7], &[0.0], &spec, &RandomStream::new(3), |idx, _| {
            assert_eq!(idx[0].len(), 30);
            assert_eq!(idx[1].len(), 7);
            assert!(idx[1].iter().all(|&i| i < 7));
            Ok(vec![0.0])
        })
        .unwrap();
    }

    #[test]
    fn normal_interval_width() {
        let iv = normal_interval(1.0, 4.0, 0.95).unwrap();
        assert!((iv.hi - 1.0 - 1.959_963_984_540_054 * 2.0).abs() < 1e-9);
        assert!(normal_interval(0.0, -1.0, 0.95).is_err());
    }

    #[test]
    fn malformed_interval() {
        assert!(matches!(Interval::new(2.0, 1.0), Err(Error::MalformedInterval { .. })));
    }
}
