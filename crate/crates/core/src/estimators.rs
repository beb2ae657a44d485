//! Error-free estimators wrapped by the correction: the fourth-moment plug-in
//! estimator and logistic regression fitted by Newton-Raphson (IRLS).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

/// One dataset with the error-prone covariate replaced by `x`.
#[derive(Clone, Copy, Debug)]
pub struct EstimatorInput<'a> {
    pub y: &'a [f64],
    pub x: &'a [f64],
    pub z: &'a Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub theta: Vec<f64>,
    /// Estimated covariance of `theta`, when requested and supported.
    pub covariance: Option<Matrix>,
}

/// An estimator that is consistent when the true covariate is observed.
pub trait Estimator: Sync {
    fn name(&self) -> String;

    /// Number of parameter coordinates given `p` error-free covariates.
    fn dimension(&self, p: usize) -> usize;

    fn coordinate_names(&self, p: usize) -> Vec<String>;

    fn supports_variance(&self) -> bool;

    fn estimate(&self, input: &EstimatorInput<'_>, with_variance: bool) -> Result<Estimate>;
}

/// `n⁻¹ Σ x_i⁴`.
pub fn fourth_moment(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, found: 0 });
    }
    Ok(x.iter().map(|v| (v * v) * (v * v)).sum::<f64>() / x.len() as f64)
}

/// `n⁻¹ · s²(x⁴)`, the plug-in variance of [`fourth_moment`].
pub fn fourth_moment_variance(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, found: n });
    }
    let mean = fourth_moment(x)?;
    let ss: f64 = x
        .iter()
        .map(|v| {
            let d = (v * v) * (v * v) - mean;
            d * d
        })
        .sum();
    Ok(ss / (n - 1) as f64 / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlsOptions {
    /// Convergence when the score's max-norm falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Coefficient max-norm above which the data are declared separated.
    pub coefficient_cap: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 50,
            coefficient_cap: 1e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub gradient_max_norm: f64,
    pub log_likelihood: f64,
}

#[inline]
fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + libm::exp(-eta))
    } else {
        let e = libm::exp(eta);
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + libm::log1p(libm::exp(-eta.abs()))
}

struct Pass {
    gradient: Vec<f64>,
    /// Packed lower triangle of XᵀWX.
    hessian: Vec<f64>,
    log_likelihood: f64,
}

fn packed(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

fn irls_pass(y: &[f64], design: &Matrix, beta: &[f64], with_hessian: bool) -> Pass {
    let d = beta.len();
    let mut gradient = vec![0.0; d];
    let mut hessian = vec![0.0; if with_hessian { d * (d + 1) / 2 } else { 0 }];
    let mut ll = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let row = design.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let p = sigmoid(eta);
        ll += yi * eta - softplus(eta);
        let r = yi - p;
        for (g, a) in gradient.iter_mut().zip(row) {
            *g += a * r;
        }
        if with_hessian {
            let w = p * (1.0 - p);
            for a in 0..d {
                let wa = w * row[a];
                for b in 0..=a {
                    hessian[packed(a, b)] += wa * row[b];
                }
            }
        }
    }
    Pass {
        gradient,
        hessian,
        log_likelihood: ll,
    }
}

fn unpack(h: &[f64], d: usize) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..=a {
            m[(a, b)] = h[packed(a, b)];
            m[(b, a)] = h[packed(a, b)];
        }
    }
    m
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_logistic_inputs(y: &[f64], design: &Matrix) -> Result<()> {
    let (n, d) = (design.rows(), design.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if n <= d {
        return Err(Error::TooFewObservations { needed: d + 1, found: n });
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidData("logistic outcome must be 0 or 1".into()));
    }
    if design.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in design matrix".into()));
    }
    Ok(())
}

/// Maximum-likelihood logistic regression by Newton-Raphson from the zero
/// vector, with step halving whenever the log-likelihood would decrease.
pub fn logistic_fit(y: &[f64], design: &Matrix, opts: &IrlsOptions) -> Result<LogisticFit> {
    check_logistic_inputs(y, design)?;
    let d = design.cols();
    let mut beta = vec![0.0; d];
    let mut pass = irls_pass(y, design, &beta, true);
    for iter in 0..=opts.max_iterations {
        let gmax = max_abs(&pass.gradient);
        if gmax <= opts.tolerance {
            if pass.log_likelihood > -1e-6 {
                // Every fitted probability is numerically 0 or 1.
                return Err(Error::Separation {
                    cap: opts.coefficient_cap,
                });
            }
            return Ok(LogisticFit {
                coefficients: beta,
                iterations: iter,
                gradient_max_norm: gmax,
                log_likelihood: pass.log_likelihood,
            });
        }
        if iter == opts.max_iterations {
            break;
        }
        let step = Cholesky::new(&unpack(&pass.hessian, d))
            .map_err(|_| Error::Separation {
                cap: opts.coefficient_cap,
            })?
            .solve(&pass.gradient);
        let mut scale = 1.0;
        loop {
            let candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let next = irls_pass(y, design, &candidate, true);
            let slack = 1e-12 * (1.0 + pass.log_likelihood.abs());
            if next.log_likelihood >= pass.log_likelihood - slack || scale < 1e-6 {
                beta = candidate;
                pass = next;
                break;
            }
            scale *= 0.5;
        }
        if max_abs(&beta) > opts.coefficient_cap {
            return Err(Error::Separation {
                cap: opts.coefficient_cap,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
    })
}

/// Inverse Fisher information `(XᵀWX)⁻¹` at `coefficients`.
pub fn logistic_variance(coefficients: &[f64], design: &Matrix) -> Result<Matrix> {
    if design.cols() != coefficients.len() {
        return Err(Error::DimensionMismatch {
            expected: coefficients.len(),
            found: design.cols(),
        });
    }
    let y = vec![0.0; design.rows()];
    let pass = irls_pass(&y, design, coefficients, true);
    Ok(Cholesky::new(&unpack(&pass.hessian, coefficients.len()))?.inverse())
}

/// Logistic regression of `y` on (intercept, x, z₁..z_p).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticModelSpec {
    pub include_intercept: bool,
}

impl Default for LogisticModelSpec {
    fn default() -> Self {
        Self {
            include_intercept: true,
        }
    }
}

impl LogisticModelSpec {
    pub fn design(&self, x: &[f64], z: &Matrix) -> Result<Matrix> {
        let n = x.len();
        if z.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: z.rows(),
            });
        }
        let d = usize::from(self.include_intercept) + 1 + z.cols();
        let mut data = Vec::with_capacity(n * d);
        for (i, &xi) in x.iter().enumerate() {
            if self.include_intercept {
                data.push(1.0);
            }
            data.push(xi);
            data.extend_from_slice(z.row(i));
        }
        Matrix::from_row_major(n, d, data)
    }
}

/// Serializable choice of estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    FourthMoment,
    Logistic {
        #[serde(default)]
        model: LogisticModelSpec,
        #[serde(default)]
        irls: IrlsOptions,
    },
}

impl EstimatorSpec {
    pub fn logistic() -> Self {
        Self::Logistic {
            model: LogisticModelSpec::default(),
            irls: IrlsOptions::default(),
        }
    }
}

impl Estimator for EstimatorSpec {
    fn name(&self) -> String {
        match self {
            Self::FourthMoment => "fourth_moment".into(),
            Self::Logistic { .. } => "logistic".into(),
        }
    }

    fn dimension(&self, p: usize) -> usize {
        match self {
            Self::FourthMoment => 1,
            Self::Logistic { model, .. } => usize::from(model.include_intercept) + 1 + p,
        }
    }

    fn coordinate_names(&self, p: usize) -> Vec<String> {
        match self {
            Self::FourthMoment => vec!["fourth_moment".into()],
            Self::Logistic { model, .. } => {
                let mut names = Vec::new();
                if model.include_intercept {
                    names.push("intercept".into());
                }
                names.push("x".into());
                names.extend((1..=p).map(|j| format!("z{j}")));
                names
            }
        }
    }

    fn supports_variance(&self) -> bool {
        true
    }

    fn estimate(&self, input: &EstimatorInput<'_>, with_variance: bool) -> Result<Estimate> {
        match self {
            Self::FourthMoment => {
                let theta = vec![fourth_moment(input.x)?];
                let covariance = if with_variance {
                    let v = fourth_moment_variance(input.x)?;
                    Some(Matrix::from_row_major(1, 1, vec![v])?)
                } else {
                    None
                };
                Ok(Estimate { theta, covariance })
            }
            Self::Logistic { model, irls } => {
                let design = model.design(input.x, input.z)?;
                let fit = logistic_fit(input.y, &design, irls)?;
                let covariance = if with_variance {
                    Some(logistic_variance(&fit.coefficients, &design)?)
                } else {
                    None
                };
                Ok(Estimate {
                    theta: fit.coefficients,
                    covariance,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_moment_hand_values() {
        assert_eq!(fourth_moment(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(fourth_moment(&[0.0, 2.0]).unwrap(), 8.0);
        assert!(matches!(fourth_moment(&[]), Err(Error::TooFewObservations { .. })));
    }

    #[test]
    fn fourth_moment_variance_hand_values() {
        assert_eq!(fourth_moment_variance(&[3.0; 4]).unwrap(), 0.0);
        // var{0, 16} = 128 (divisor n-1), divided by n = 2.
        assert_eq!(fourth_moment_variance(&[0.0, 2.0]).unwrap(), 64.0);
        assert!(fourth_moment_variance(&[1.0]).is_err());
    }

    #[test]
    fn fourth_moment_sign_flip() {
        let x = [0.3, -1.7, 2.2, 5.0, -0.01];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(fourth_moment(&x).unwrap(), fourth_moment(&neg).unwrap());
    }

    #[test]
    fn balanced_intercept_only() {
        let y = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let design = Matrix::from_row_major(6, 1, vec![1.0; 6]).unwrap();
        let fit = logistic_fit(&y, &design, &IrlsOptions::default()).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-12);
        let v = logistic_variance(&fit.coefficients, &design).unwrap();
        assert!((v[(0, 0)] - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn separation_detected() {
        let x = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let design = LogisticModelSpec::default()
            .design(&x, &Matrix::empty(6))
            .unwrap();
        let err = logistic_fit(&y, &design, &IrlsOptions::default()).unwrap_err();
        assert!(
            matches!(err, Error::Separation { .. } | Error::NoConvergence { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn rejects_non_binary_outcome() {
        let design = Matrix::from_row_major(3, 1, vec![1.0; 3]).unwrap();
        assert!(matches!(
            logistic_fit(&[0.0, 0.5, 1.0], &design, &IrlsOptions::default()),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn design_layout() {
        let z = Matrix::from_rows(&[vec![7.0], vec![8.0]]).unwrap();
        let d = LogisticModelSpec::default().design(&[1.5, 2.5], &z).unwrap();
        assert_eq!(d.as_slice(), &[1.0, 1.5, 7.0, 1.0, 2.5, 8.0]);
        let names = EstimatorSpec::logistic().coordinate_names(1);
        assert_eq!(names, vec!["intercept", "x", "z1"]);
    }
}
