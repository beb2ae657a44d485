//! Extrapolant curves fitted to `(λ, θ̂(λ))` and evaluated at `λ = -1`.
//!
//! Linear and quadratic curves are fitted by Householder least squares. The
//! rational curve `G(λ) = γ₁ + γ₂ / (γ₃ + λ)` is fitted by damped Gauss-Newton.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};

const RANK_TOL: f64 = 1e-13;
const GN_MAX_ITER: usize = 100;
const GN_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolantKind {
    Linear,
    Quadratic,
    /// `γ₁ + γ₂ / (γ₃ + λ)`, often called the nonlinear extrapolant.
    Rational,
}

impl ExtrapolantKind {
    pub fn parameter_count(self) -> usize {
        match self {
            Self::Linear => 2,
            Self::Quadratic | Self::Rational => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Quadratic => "quadratic",
            Self::Rational => "rational",
        }
    }
}

impl core::str::FromStr for ExtrapolantKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            "rational" | "nonlinear" => Ok(Self::Rational),
            other => Err(Error::Config(alloc::format!("unknown extrapolant '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolantFit {
    pub kind: ExtrapolantKind,
    /// `(a, b)`, `(a, b, c)` or `(γ₁, γ₂, γ₃)`.
    pub params: Vec<f64>,
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ExtrapolantFit {
    pub fn predict(&self, lambda: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            ExtrapolantKind::Linear => p[0] + p[1] * lambda,
            ExtrapolantKind::Quadratic => p[0] + p[1] * lambda + p[2] * lambda * lambda,
            ExtrapolantKind::Rational => p[0] + p[1] / (p[2] + lambda),
        }
    }

    /// The corrected estimate `G(-1)`.
    pub fn extrapolate(&self) -> f64 {
        self.predict(-1.0)
    }
}

fn rss_of(points: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    points
        .iter()
        .map(|&(l, v)| {
            let r = v - f(l);
            r * r
        })
        .sum()
}

fn polynomial(points: &[(f64, f64)], degree: usize) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|&(l, _)| (0..=degree).map(|j| libm::pow(l, j as f64)).collect())
        .collect();
    let a = Matrix::from_rows(&rows)?;
    let b: Vec<f64> = points.iter().map(|p| p.1).collect();
    least_squares(&a, &b, RANK_TOL)
}

/// Fit `kind` to `points` (distinct λ values).
pub fn fit_extrapolant(points: &[(f64, f64)], kind: ExtrapolantKind) -> Result<ExtrapolantFit> {
    let needed = kind.parameter_count();
    if points.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            found: points.len(),
        });
    }
    if points.iter().any(|(l, v)| !l.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidData("non-finite extrapolation point".into()));
    }
    let mut lambdas: Vec<f64> = points.iter().map(|p| p.0).collect();
    lambdas.sort_by(f64::total_cmp);
    if lambdas.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidGrid("extrapolation lambdas must be distinct"));
    }
    let max_lambda = lambdas[lambdas.len() - 1];

    // A flat trace is reproduced exactly, so a noiseless remeasurement
    // leaves the estimate untouched.
    let first = points[0].1;
    if points.iter().all(|p| p.1 == first) {
        let params = match kind {
            ExtrapolantKind::Linear => vec![first, 0.0],
            ExtrapolantKind::Quadratic => vec![first, 0.0, 0.0],
            ExtrapolantKind::Rational => vec![first, 0.0, max_lambda + 1.0],
        };
        return Ok(ExtrapolantFit {
            kind,
            params,
            rss: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    match kind {
        ExtrapolantKind::Linear | ExtrapolantKind::Quadratic => {
            let params = polynomial(points, needed - 1)?;
            let fit = ExtrapolantFit {
                kind,
                rss: 0.0,
                params,
                converged: true,
                iterations: 0,
            };
            let rss = rss_of(points, |l| fit.predict(l));
            Ok(ExtrapolantFit { rss, ..fit })
        }
        ExtrapolantKind::Rational => fit_rational(points, max_lambda),
    }
}

/// `(γ₁, γ₂)` by linear least squares with `γ₃` held fixed.
fn rational_linear_part(points: &[(f64, f64)], gamma3: f64) -> Result<[f64; 3]> {
    let rows: Vec<Vec<f64>> = points.iter().map(|&(l, _)| vec![1.0, 1.0 / (gamma3 + l)]).collect();
    let b: Vec<f64> = points.iter().map(|p| p.1).collect();
    let g = least_squares(&Matrix::from_rows(&rows)?, &b, RANK_TOL)?;
    Ok([g[0], g[1], gamma3])
}

fn rational_rss(points: &[(f64, f64)], g: &[f64; 3]) -> f64 {
    let rss = rss_of(points, |l| g[0] + g[1] / (g[2] + l));
    if rss.is_finite() {
        rss
    } else {
        f64::INFINITY
    }
}

struct GaussNewton {
    gamma: [f64; 3],
    rss: f64,
    converged: bool,
    iterations: usize,
}

fn gauss_newton(points: &[(f64, f64)], start: [f64; 3]) -> Result<GaussNewton> {
    let mut g = start;
    let mut rss = rational_rss(points, &g);
    let scale_y = points.iter().fold(0.0f64, |m, p| m.max(p.1.abs())).max(1.0);
    for iter in 0..GN_MAX_ITER {
        if rss <= 1e-28 * scale_y * scale_y * points.len() as f64 {
            return Ok(GaussNewton {
                gamma: g,
                rss,
                converged: true,
                iterations: iter,
            });
        }
        let mut rows = Vec::with_capacity(points.len());
        let mut resid = Vec::with_capacity(points.len());
        for &(l, v) in points {
            let inv = 1.0 / (g[2] + l);
            rows.push(vec![1.0, inv, -g[1] * inv * inv]);
            resid.push(v - (g[0] + g[1] * inv));
        }
        let step = least_squares(&Matrix::from_rows(&rows)?, &resid, RANK_TOL)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = [g[0] + t * step[0], g[1] + t * step[1], g[2] + t * step[2]];
            let cand_rss = rational_rss(points, &cand);
            if cand_rss <= rss {
                accepted = Some((cand, cand_rss));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cand_rss)) = accepted else {
            // No descent along the Gauss-Newton direction: at a numerical minimum.
            return Ok(GaussNewton {
                gamma: g,
                rss,
                converged: true,
                iterations: iter,
            });
        };
        let small = (0..3).all(|i| (cand[i] - g[i]).abs() <= GN_TOL * (1.0 + g[i].abs()));
        g = cand;
        rss = cand_rss;
        if small {
            return Ok(GaussNewton {
                gamma: g,
                rss,
                converged: true,
                iterations: iter + 1,
            });
        }
    }
    Ok(GaussNewton {
        gamma: g,
        rss,
        converged: false,
        iterations: GN_MAX_ITER,
    })
}

fn pole_inside(gamma3: f64, max_lambda: f64) -> bool {
    // Pole at λ = -γ₃.
    let pole = -gamma3;
    (-1.0..=max_lambda).contains(&pole)
}

fn fit_rational(points: &[(f64, f64)], max_lambda: f64) -> Result<ExtrapolantFit> {
    let primary = gauss_newton(points, rational_linear_part(points, max_lambda + 1.0)?)?;
    let mut best = primary;
    if !best.converged || pole_inside(best.gamma[2], max_lambda) {
        // Restart from a profile over γ₃ values outside the forbidden interval
        // and keep the best least-squares fit.
        let span = max_lambda.max(1.0);
        for mult in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0] {
            for gamma3 in [1.0 + mult * span, -(max_lambda + mult * span)] {
                let Ok(start) = rational_linear_part(points, gamma3) else {
                    continue;
                };
                let Ok(cand) = gauss_newton(points, start) else {
                    continue;
                };
                let better =
                    (cand.converged && !best.converged) || (cand.converged == best.converged && cand.rss < best.rss);
                if better {
                    best = cand;
                }
            }
        }
    }
    if pole_inside(best.gamma[2], max_lambda) {
        return Err(Error::ExtrapolantPole {
            pole: -best.gamma[2],
            max_lambda,
        });
    }
    Ok(ExtrapolantFit {
        kind: ExtrapolantKind::Rational,
        params: best.gamma.to_vec(),
        rss: best.rss,
        converged: best.converged,
        iterations: best.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64, lambdas: impl Iterator<Item = f64>) -> Vec<(f64, f64)> {
        lambdas.map(|l| (l, f(l))).collect()
    }

    #[test]
    fn quadratic_exact() {
        let pts = grid(|l| 5.0 - 3.0 * l + 2.0 * l * l, (0..10).map(f64::from));
        let fit = fit_extrapolant(&pts, ExtrapolantKind::Quadratic).unwrap();
        for (got, want) in fit.params.iter().zip([5.0, -3.0, 2.0]) {
            assert!((got - want).abs() < 1e-10, "{:?}", fit.params);
        }
        assert!((fit.extrapolate() - 10.0).abs() < 1e-10);
    }

    #[test]
    fn linear_exact() {
        let pts = grid(|l| 1.0 + 0.5 * l, [0.0, 0.5, 1.0, 2.0].into_iter());
        let fit = fit_extrapolant(&pts, ExtrapolantKind::Linear).unwrap();
        assert!((fit.extrapolate() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rational_recovers_generator() {
        let pts = grid(|l| 2.0 + 3.0 / (1.5 + l), (0..=8).map(f64::from));
        let fit = fit_extrapolant(&pts, ExtrapolantKind::Rational).unwrap();
        assert!(fit.converged);
        for (got, want) in fit.params.iter().zip([2.0, 3.0, 1.5]) {
            assert!((got - want).abs() < 1e-6, "{:?}", fit.params);
        }
        assert!((fit.extrapolate() - 8.0).abs() < 1e-5);
    }

    #[test]
    fn rational_negative_curvature() {
        // Typical attenuation trace: decreasing in magnitude towards zero.
        let pts = grid(|l| -0.2 - 0.8 / (1.8 + l), (0..10).map(f64::from));
        let fit = fit_extrapolant(&pts, ExtrapolantKind::Rational).unwrap();
        assert!((fit.extrapolate() - (-0.2 - 1.0)).abs() < 1e-6, "{:?}", fit);
    }

    #[test]
    fn flat_trace_is_exact() {
        let pts = grid(|_| 0.123_456_789, (0..5).map(f64::from));
        for kind in [ExtrapolantKind::Linear, ExtrapolantKind::Quadratic, ExtrapolantKind::Rational] {
            assert_eq!(fit_extrapolant(&pts, kind).unwrap().extrapolate(), 0.123_456_789);
        }
    }

    #[test]
    fn too_few_points() {
        let pts = [(0.0, 1.0), (1.0, 2.0)];
        assert_eq!(
            fit_extrapolant(&pts, ExtrapolantKind::Quadratic),
            Err(Error::TooFewPoints { needed: 3, found: 2 })
        );
    }

    #[test]
    fn duplicate_lambdas_rejected() {
        let pts = [(0.0, 1.0), (1.0, 2.0), (1.0, 3.0)];
        assert!(matches!(
            fit_extrapolant(&pts, ExtrapolantKind::Quadratic),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn pole_inside_range_rejected() {
        // Generated with γ₃ = 0.5: pole at λ = -0.5, between -1 and the grid.
        let pts = grid(|l| 1.0 + 1.0 / (0.5 + l), (0..8).map(f64::from));
        assert!(matches!(
            fit_extrapolant(&pts, ExtrapolantKind::Rational),
            Err(Error::ExtrapolantPole { .. })
        ));
    }
}
