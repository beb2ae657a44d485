//! Observed data and construction of the empirical error set.
//!
//! The error set is built either from validation pairs (`U = X* - X`) or,
//! with `k >= 2` replicates per subject, from a contrast `a` with `Σa = 0`
//! and `Σ|a| = 1`: the proxy becomes `Σ|a_j| X*_j` and the pseudo-error
//! `Σ a_j X*_j`. For symmetric errors the two have the same error law.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Outcome, `k` proxy replicates and `p` error-free covariates for `n` subjects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedData {
    y: Vec<f64>,
    x_star: Matrix,
    z: Matrix,
}

impl ObservedData {
    pub fn new(y: Vec<f64>, x_star: Matrix, z: Matrix) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::TooFewObservations { needed: 1, found: 0 });
        }
        if x_star.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x_star.rows(),
            });
        }
        if z.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: z.rows(),
            });
        }
        if x_star.cols() == 0 {
            return Err(Error::InvalidData("at least one proxy column is required".into()));
        }
        let finite = |s: &[f64]| s.iter().all(|v| v.is_finite());
        if !finite(&y) || !finite(x_star.as_slice()) || !finite(z.as_slice()) {
            return Err(Error::InvalidData("non-finite value in observed data".into()));
        }
        Ok(Self { y, x_star, z })
    }

    /// Single-proxy data (validation designs).
    pub fn single_proxy(y: Vec<f64>, x_star: Vec<f64>, z: Matrix) -> Result<Self> {
        let n = x_star.len();
        Self::new(y, Matrix::from_row_major(n, 1, x_star)?, z)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Replicates per subject.
    pub fn k(&self) -> usize {
        self.x_star.cols()
    }

    pub fn p(&self) -> usize {
        self.z.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x_star(&self) -> &Matrix {
        &self.x_star
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    /// Rows selected by `idx` (bootstrap resampling).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            y: idx.iter().map(|&i| self.y[i]).collect(),
            x_star: self.x_star.select_rows(idx),
            z: self.z.select_rows(idx),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationFlavor {
    Internal,
    External,
}

/// Subjects with both the true covariate and its proxy observed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationPairs {
    x_true: Vec<f64>,
    x_star: Vec<f64>,
    flavor: ValidationFlavor,
}

impl ValidationPairs {
    pub fn new(x_true: Vec<f64>, x_star: Vec<f64>, flavor: ValidationFlavor) -> Result<Self> {
        if x_true.len() != x_star.len() {
            return Err(Error::DimensionMismatch {
                expected: x_true.len(),
                found: x_star.len(),
            });
        }
        if x_true.len() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                found: x_true.len(),
            });
        }
        if x_true.iter().chain(&x_star).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value in validation data".into()));
        }
        Ok(Self {
            x_true,
            x_star,
            flavor,
        })
    }

    pub fn len(&self) -> usize {
        self.x_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_true.is_empty()
    }

    pub fn x_true(&self) -> &[f64] {
        &self.x_true
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn flavor(&self) -> ValidationFlavor {
        self.flavor
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            x_true: idx.iter().map(|&i| self.x_true[i]).collect(),
            x_star: idx.iter().map(|&i| self.x_star[i]).collect(),
            flavor: self.flavor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Validation,
    Replicates { contrast: Vec<f64> },
}

/// The empirical error sample resampled by nonparametric remeasurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSet {
    values: Vec<f64>,
    provenance: Provenance,
}

/// Descriptive statistics of an error set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl ErrorSet {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyErrorSet);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value in error set".into()));
        }
        Ok(Self { values, provenance })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Variance with divisor `n` (the variance of one resampled draw).
    pub fn population_variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    /// Scale every value by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Moment-based summary; skewness and kurtosis use the `n`-divisor moments.
    pub fn summary(&self) -> ErrorSummary {
        let n = self.values.len() as f64;
        let mean = self.mean();
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in &self.values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / libm::pow(m2, 1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        let sd = if self.values.len() > 1 {
            libm::sqrt(m2 * n / (n - 1.0))
        } else {
            0.0
        };
        ErrorSummary {
            n: self.values.len(),
            mean,
            sd,
            skewness,
            excess_kurtosis,
        }
    }
}

/// Weights splitting `k` replicates into a pseudo-true value and a pseudo-error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Contrast {
    a: Vec<f64>,
}

impl Contrast {
    /// A user-supplied contrast; must satisfy `Σa = 0` and `Σ|a| = 1`.
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::TooFewReplicates);
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidContrast("weights must be finite"));
        }
        let tol = 4.0 * f64::EPSILON * a.len() as f64;
        if a.iter().sum::<f64>().abs() > tol {
            return Err(Error::InvalidContrast("weights must sum to zero"));
        }
        if (a.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() > tol {
            return Err(Error::InvalidContrast("absolute weights must sum to one"));
        }
        Ok(Self { a })
    }

    pub fn weights(&self) -> &[f64] {
        &self.a
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// `Σ a_j²`: the proxy's error variance is `σ_U² · Σ a_j²`.
    pub fn sum_of_squares(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum()
    }
}

impl TryFrom<Vec<f64>> for Contrast {
    type Error = Error;
    fn try_from(a: Vec<f64>) -> Result<Self> {
        Self::new(a)
    }
}

impl From<Contrast> for Vec<f64> {
    fn from(c: Contrast) -> Self {
        c.a
    }
}

/// The default contrast for `k` replicates: half positive, half negative
/// weights, with the extra replicate on the positive side when `k` is odd.
pub fn contrast_for(k: usize) -> Result<Contrast> {
    if k < 2 {
        return Err(Error::TooFewReplicates);
    }
    let a = if k % 2 == 0 {
        let w = 1.0 / k as f64;
        let mut a = vec![w; k / 2];
        a.extend(core::iter::repeat(-w).take(k / 2));
        a
    } else {
        let pos = 1.0 / (k + 1) as f64;
        let neg = -1.0 / (k - 1) as f64;
        let mut a = vec![pos; (k + 1) / 2];
        a.extend(core::iter::repeat(neg).take((k - 1) / 2));
        a
    };
    Ok(Contrast { a })
}

/// `U_i = X*_i - X_i` over the validation subjects.
pub fn error_set_from_validation(v: &ValidationPairs) -> ErrorSet {
    let values = v
        .x_star
        .iter()
        .zip(&v.x_true)
        .map(|(s, t)| s - t)
        .collect();
    // Non-empty by the ValidationPairs invariant.
    ErrorSet {
        values,
        provenance: Provenance::Validation,
    }
}

/// Apply a contrast row by row: returns the proxy `Σ|a_j| x*_ij` and the
/// error set `{Σ a_j x*_ij}`.
pub fn error_set_from_replicates(x_star: &Matrix, a: &Contrast) -> Result<(Vec<f64>, ErrorSet)> {
    if x_star.cols() != a.k() {
        return Err(Error::DimensionMismatch {
            expected: a.k(),
            found: x_star.cols(),
        });
    }
    if x_star.rows() == 0 {
        return Err(Error::EmptyErrorSet);
    }
    let mut x_tilde = Vec::with_capacity(x_star.rows());
    let mut errors = Vec::with_capacity(x_star.rows());
    for i in 0..x_star.rows() {
        let row = x_star.row(i);
        let (mut proxy, mut err) = (0.0, 0.0);
        for (x, w) in row.iter().zip(&a.a) {
            proxy += w.abs() * x;
            err += w * x;
        }
        x_tilde.push(proxy);
        errors.push(err);
    }
    Ok((
        x_tilde,
        ErrorSet {
            values: errors,
            provenance: Provenance::Replicates {
                contrast: a.a.clone(),
            },
        },
    ))
}

/// `(2n)⁻¹ Σ (x*_i1 - x*_i2)²` for two replicates per subject.
pub fn estimate_sigma2(x_star: &Matrix) -> Result<f64> {
    if x_star.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x_star.cols(),
        });
    }
    let n = x_star.rows();
    if n == 0 {
        return Err(Error::TooFewObservations { needed: 1, found: 0 });
    }
    let ss: f64 = (0..n)
        .map(|i| {
            let d = x_star[(i, 0)] - x_star[(i, 1)];
            d * d
        })
        .sum();
    Ok(ss / (2.0 * n as f64))
}

/// Pooled within-subject variance `Σ_i Σ_j (x*_ij - x̄*_i)² / (n(k-1))`.
/// Equals [`estimate_sigma2`] up to rounding when `k = 2`.
pub fn estimate_sigma2_pooled(x_star: &Matrix) -> Result<f64> {
    let (n, k) = (x_star.rows(), x_star.cols());
    if k < 2 {
        return Err(Error::TooFewReplicates);
    }
    if n == 0 {
        return Err(Error::TooFewObservations { needed: 1, found: 0 });
    }
    let mut ss = 0.0;
    for i in 0..n {
        let row = x_star.row(i);
        let mean = row.iter().sum::<f64>() / k as f64;
        ss += row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    }
    Ok(ss / (n * (k - 1)) as f64)
}

/// Sample variance (divisor `n₁ - 1`) of the validation residuals.
pub fn estimate_sigma2_from_validation(v: &ValidationPairs) -> Result<f64> {
    let n = v.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, found: n });
    }
    let e = error_set_from_validation(v);
    let m = e.mean();
    Ok(e.values.iter().map(|u| (u - m) * (u - m)).sum::<f64>() / (n - 1) as f64)
}

/// Per-replicate error variance from whatever auxiliary data is present.
pub fn estimate_error_variance(data: &ObservedData, validation: Option<&ValidationPairs>) -> Result<f64> {
    match (validation, data.k()) {
        (Some(v), _) => estimate_sigma2_from_validation(v),
        (None, 2) => estimate_sigma2(data.x_star()),
        (None, k) if k > 2 => estimate_sigma2_pooled(data.x_star()),
        (None, k) => Err(Error::Config(format!(
            "error variance needs validation data or at least two replicates (k = {k})"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn default_contrast_weights() {
        assert_eq!(contrast_for(2).unwrap().weights(), &[0.5, -0.5]);
        assert_eq!(contrast_for(4).unwrap().weights(), &[0.25, 0.25, -0.25, -0.25]);
        assert_eq!(contrast_for(3).unwrap().weights(), &[0.25, 0.25, -0.5]);
        assert_eq!(contrast_for(1), Err(Error::TooFewReplicates));
        assert_eq!(contrast_for(0), Err(Error::TooFewReplicates));
    }

    #[test]
    fn user_contrast_validated() {
        assert!(Contrast::new(vec![0.5, -0.25, -0.25]).is_ok());
        assert!(matches!(
            Contrast::new(vec![0.5, 0.5]),
            Err(Error::InvalidContrast(_))
        ));
        assert!(matches!(
            Contrast::new(vec![1.0, -1.0]),
            Err(Error::InvalidContrast(_))
        ));
    }

    #[test]
    fn validation_errors() {
        let v = ValidationPairs::new(vec![1.0, 2.0], vec![1.0, 2.0], ValidationFlavor::Internal).unwrap();
        assert_eq!(error_set_from_validation(&v).values(), &[0.0, 0.0]);
        let v = ValidationPairs::new(
            vec![1.0, 2.0, 3.0],
            vec![1.5, 1.0, 3.2],
            ValidationFlavor::External,
        )
        .unwrap();
        let e = error_set_from_validation(&v);
        let expect = [0.5, -1.0, 0.2];
        for (a, b) in e.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // (0.5, -1.0, 0.2): mean -0.1, squared deviations 0.36 + 0.81 + 0.09.
        let s2 = estimate_sigma2_from_validation(&v).unwrap();
        assert!((s2 - 1.26 / 2.0).abs() < 1e-12, "{s2}");
    }

    #[test]
    fn validation_needs_two_pairs() {
        assert!(matches!(
            ValidationPairs::new(vec![1.0], vec![1.0], ValidationFlavor::Internal),
            Err(Error::TooFewObservations { .. })
        ));
        assert!(matches!(
            ValidationPairs::new(vec![1.0, 2.0], vec![1.0], ValidationFlavor::Internal),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn replicate_contrast_k2() {
        let (xt, e) = error_set_from_replicates(&m(&[[3.0, 1.0], [4.0, 4.0]]), &contrast_for(2).unwrap()).unwrap();
        assert_eq!(xt, vec![2.0, 4.0]);
        assert_eq!(e.values(), &[1.0, 0.0]);
    }

    #[test]
    fn replicate_dimension_mismatch() {
        assert!(matches!(
            error_set_from_replicates(&m(&[[3.0, 1.0]]), &contrast_for(3).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sigma2_hand_values() {
        assert_eq!(estimate_sigma2(&m(&[[1.0, 3.0], [2.0, 0.0]])).unwrap(), 2.0);
        assert_eq!(estimate_sigma2(&m(&[[1.0, 1.0], [5.0, 5.0]])).unwrap(), 0.0);
        let three = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(estimate_sigma2(&three), Err(Error::DimensionMismatch { .. })));
        // Pooled: deviations (-1, 0, 1) over n(k-1) = 2.
        assert_eq!(estimate_sigma2_pooled(&three).unwrap(), 1.0);
        assert_eq!(estimate_sigma2_pooled(&m(&[[1.0, 3.0], [2.0, 0.0]])).unwrap(), 2.0);
    }

    #[test]
    fn summary_of_symmetric_set() {
        let e = ErrorSet::new(vec![-1.0, 1.0, -1.0, 1.0], Provenance::Validation).unwrap();
        let s = e.summary();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.excess_kurtosis, -2.0);
        assert_eq!(ErrorSet::new(vec![], Provenance::Validation), Err(Error::EmptyErrorSet));
    }
}
