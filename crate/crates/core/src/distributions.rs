//! Error and covariate distributions used by the simulation designs.
//!
//! Normal distributions are parameterized by **(mean, variance)** throughout,
//! so `N(1, 2)` in a scenario file means variance 2.

use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::data::ErrorSet;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

fn default_sd_base() -> f64 {
    1.0
}

fn default_sd_inflated() -> f64 {
    5.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Variance 0 is a point mass at `mean`.
    Normal {
        mean: f64,
        variance: f64,
    },
    StudentT {
        df: f64,
    },
    Laplace {
        location: f64,
        scale: f64,
    },
    /// Gamma with the given shape and scale; `centered` subtracts
    /// `shape * scale` so the mean is zero.
    Gamma {
        shape: f64,
        scale: f64,
        #[serde(default)]
        centered: bool,
    },
    /// With probability `1 - rho` draw `N(0, sd_base²)`, otherwise
    /// `N(0, sd_inflated²)`.
    ContaminatedNormal {
        rho: f64,
        #[serde(default = "default_sd_base")]
        sd_base: f64,
        #[serde(default = "default_sd_inflated")]
        sd_inflated: f64,
    },
    Empirical(ErrorSet),
}

impl DistributionSpec {
    pub fn standard_normal() -> Self {
        Self::Normal {
            mean: 0.0,
            variance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |cond: bool, msg: &'static str| {
            if cond {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(msg))
            }
        };
        match self {
            Self::Normal { mean, variance } => {
                ok(mean.is_finite(), "normal mean must be finite")?;
                ok(*variance >= 0.0 && variance.is_finite(), "normal variance must be >= 0")
            }
            Self::StudentT { df } => ok(*df > 0.0 && df.is_finite(), "degrees of freedom must be > 0"),
            Self::Laplace { location, scale } => {
                ok(location.is_finite(), "laplace location must be finite")?;
                ok(*scale > 0.0 && scale.is_finite(), "laplace scale must be > 0")
            }
            Self::Gamma { shape, scale, .. } => {
                ok(*shape > 0.0 && shape.is_finite(), "gamma shape must be > 0")?;
                ok(*scale > 0.0 && scale.is_finite(), "gamma scale must be > 0")
            }
            Self::ContaminatedNormal {
                rho,
                sd_base,
                sd_inflated,
            } => {
                ok((0.0..=1.0).contains(rho), "mixing probability must lie in [0, 1]")?;
                ok(*sd_base > 0.0 && sd_base.is_finite(), "sd_base must be > 0")?;
                ok(
                    *sd_inflated > 0.0 && sd_inflated.is_finite(),
                    "sd_inflated must be > 0",
                )
            }
            Self::Empirical(set) => {
                if set.is_empty() {
                    Err(Error::EmptyErrorSet)
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn mean(&self) -> Option<f64> {
        Some(match self {
            Self::Normal { mean, .. } => *mean,
            Self::StudentT { df } if *df > 1.0 => 0.0,
            Self::StudentT { .. } => return None,
            Self::Laplace { location, .. } => *location,
            Self::Gamma { centered: true, .. } => 0.0,
            Self::Gamma { shape, scale, .. } => shape * scale,
            Self::ContaminatedNormal { .. } => 0.0,
            Self::Empirical(set) => set.mean(),
        })
    }

    pub fn variance(&self) -> Option<f64> {
        Some(match self {
            Self::Normal { variance, .. } => *variance,
            Self::StudentT { df } if *df > 2.0 => df / (df - 2.0),
            Self::StudentT { .. } => return None,
            Self::Laplace { scale, .. } => 2.0 * scale * scale,
            Self::Gamma { shape, scale, .. } => shape * scale * scale,
            Self::ContaminatedNormal {
                rho,
                sd_base,
                sd_inflated,
            } => (1.0 - rho) * sd_base * sd_base + rho * sd_inflated * sd_inflated,
            Self::Empirical(set) => set.population_variance(),
        })
    }

    /// `E[X^4]`, when it exists in closed form.
    pub fn fourth_raw_moment(&self) -> Option<f64> {
        Some(match self {
            Self::Normal { mean, variance } => {
                let (m2, v) = (mean * mean, *variance);
                m2 * m2 + 6.0 * m2 * v + 3.0 * v * v
            }
            Self::StudentT { df } if *df > 4.0 => 3.0 * df * df / ((df - 2.0) * (df - 4.0)),
            Self::StudentT { .. } => return None,
            Self::Laplace { location, scale } => {
                let m2 = location * location;
                m2 * m2 + 12.0 * m2 * scale * scale + 24.0 * libm::pow(*scale, 4.0)
            }
            Self::Gamma {
                shape,
                scale,
                centered,
            } => {
                let t4 = libm::pow(*scale, 4.0);
                if *centered {
                    (3.0 * shape * shape + 6.0 * shape) * t4
                } else {
                    shape * (shape + 1.0) * (shape + 2.0) * (shape + 3.0) * t4
                }
            }
            Self::ContaminatedNormal {
                rho,
                sd_base,
                sd_inflated,
            } => 3.0 * ((1.0 - rho) * libm::pow(*sd_base, 4.0) + rho * libm::pow(*sd_inflated, 4.0)),
            Self::Empirical(set) => {
                set.values().iter().map(|u| (u * u) * (u * u)).sum::<f64>() / set.len() as f64
            }
        })
    }

    /// Validated sampler for repeated draws.
    pub fn sampler(&self) -> Result<Sampler<'_>> {
        self.validate()?;
        Ok(match self {
            Self::Normal { mean, variance } => Sampler::Normal {
                mean: *mean,
                sd: libm::sqrt(*variance),
            },
            Self::StudentT { df } => Sampler::StudentT(
                StudentT::new(*df).map_err(|_| Error::InvalidDistribution("student t"))?,
            ),
            Self::Laplace { location, scale } => Sampler::Laplace {
                location: *location,
                scale: *scale,
            },
            Self::Gamma {
                shape,
                scale,
                centered,
            } => Sampler::Gamma {
                dist: Gamma::new(*shape, *scale).map_err(|_| Error::InvalidDistribution("gamma"))?,
                shift: if *centered { shape * scale } else { 0.0 },
            },
            Self::ContaminatedNormal {
                rho,
                sd_base,
                sd_inflated,
            } => Sampler::Contaminated {
                rho: *rho,
                sd_base: *sd_base,
                sd_inflated: *sd_inflated,
            },
            Self::Empirical(set) => Sampler::Empirical(set.values()),
        })
    }

    /// `n` independent draws.
    pub fn sample(&self, n: usize, rng: &mut RandomStream) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n];
        self.sample_into(&mut out, rng)?;
        Ok(out)
    }

    pub fn sample_into(&self, out: &mut [f64], rng: &mut RandomStream) -> Result<()> {
        let s = self.sampler()?;
        for v in out.iter_mut() {
            *v = s.draw(rng);
        }
        Ok(())
    }
}

/// A validated, ready-to-draw distribution.
#[derive(Clone, Debug)]
pub enum Sampler<'a> {
    Normal { mean: f64, sd: f64 },
    StudentT(StudentT<f64>),
    Laplace { location: f64, scale: f64 },
    Gamma { dist: Gamma<f64>, shift: f64 },
    Contaminated { rho: f64, sd_base: f64, sd_inflated: f64 },
    Empirical(&'a [f64]),
}

impl Sampler<'_> {
    #[inline]
    pub fn draw(&self, rng: &mut RandomStream) -> f64 {
        match self {
            Self::Normal { mean, sd } => mean + sd * standard_normal(rng),
            Self::StudentT(t) => t.sample(rng),
            Self::Laplace { location, scale } => {
                // Inverse CDF on u ∈ (-1/2, 1/2).
                let u = rng.next_f64() - 0.5;
                let tail = 1.0 - 2.0 * u.abs();
                let tail = if tail > 0.0 { tail } else { f64::MIN_POSITIVE };
                location - scale * u.signum() * libm::log(tail)
            }
            Self::Gamma { dist, shift } => dist.sample(rng) - shift,
            Self::Contaminated {
                rho,
                sd_base,
                sd_inflated,
            } => {
                let sd = if rng.next_f64() < *rho { sd_inflated } else { sd_base };
                sd * standard_normal(rng)
            }
            Self::Empirical(values) => values[rng.uniform_index(values.len())],
        }
    }
}

#[inline]
pub fn standard_normal(rng: &mut RandomStream) -> f64 {
    StandardNormal.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ErrorSet, Provenance};

    fn moments(x: &[f64]) -> (f64, f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        let m4 = x.iter().map(|v| libm::pow(*v, 4.0)).sum::<f64>() / n;
        (m, v, m4)
    }

    #[test]
    fn standard_normal_moments() {
        let x = DistributionSpec::standard_normal()
            .sample(100_000, &mut RandomStream::new(11))
            .unwrap();
        let (m, v, _) = moments(&x);
        assert!(m.abs() < 0.02, "mean {m}");
        assert!((v - 1.0).abs() < 0.03, "variance {v}");
    }

    #[test]
    fn singleton_empirical_repeats_atom() {
        let set = ErrorSet::new(vec![2.5], Provenance::Validation).unwrap();
        let x = DistributionSpec::Empirical(set)
            .sample(5, &mut RandomStream::new(0))
            .unwrap();
        assert_eq!(x, vec![2.5; 5]);
    }

    #[test]
    fn student_t5_moments() {
        let x = DistributionSpec::StudentT { df: 5.0 }
            .sample(1_000_000, &mut RandomStream::new(3))
            .unwrap();
        let (_, v, _) = moments(&x);
        assert!((v - 5.0 / 3.0).abs() < 0.03, "variance {v}");
        // The sample fourth moment converges too slowly to test (the eighth
        // moment is infinite); check a tail probability instead.
        let tail = x.iter().filter(|u| u.abs() > 2.0).count() as f64 / x.len() as f64;
        assert!((tail - 0.101_939_478_8).abs() < 0.0015, "P(|T| > 2) = {tail}");
    }

    #[test]
    fn centered_gamma_has_zero_mean() {
        let (a, s) = (1.0, 1.5);
        let x = DistributionSpec::Gamma {
            shape: a,
            scale: s,
            centered: true,
        }
        .sample(1_000_000, &mut RandomStream::new(8))
        .unwrap();
        let (m, _, _) = moments(&x);
        assert!(m.abs() < 4.0 * s * libm::sqrt(a / 1e6), "mean {m}");
    }

    #[test]
    fn laplace_variance() {
        let x = DistributionSpec::Laplace {
            location: 0.0,
            scale: 0.7,
        }
        .sample(200_000, &mut RandomStream::new(4))
        .unwrap();
        let (m, v, _) = moments(&x);
        assert!(m.abs() < 0.01);
        assert!((v - 2.0 * 0.49).abs() < 0.03, "variance {v}");
    }

    #[test]
    fn zero_variance_normal_is_a_point_mass() {
        let x = DistributionSpec::Normal {
            mean: 1.5,
            variance: 0.0,
        }
        .sample(10, &mut RandomStream::new(0))
        .unwrap();
        assert_eq!(x, vec![1.5; 10]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = [
            DistributionSpec::Normal {
                mean: 0.0,
                variance: -1.0,
            },
            DistributionSpec::StudentT { df: -1.0 },
            DistributionSpec::Laplace {
                location: 0.0,
                scale: 0.0,
            },
            DistributionSpec::Gamma {
                shape: 0.0,
                scale: 1.0,
                centered: false,
            },
            DistributionSpec::ContaminatedNormal {
                rho: 1.5,
                sd_base: 1.0,
                sd_inflated: 5.0,
            },
        ];
        for d in bad {
            assert!(matches!(d.validate(), Err(Error::InvalidDistribution(_))), "{d:?}");
        }
    }

    #[test]
    fn fourth_moment_closed_forms() {
        let x = DistributionSpec::Normal {
            mean: 5.0,
            variance: 4.0,
        };
        assert_eq!(x.fourth_raw_moment(), Some(1273.0));
        assert_eq!(DistributionSpec::StudentT { df: 5.0 }.fourth_raw_moment(), Some(25.0));
    }
}
