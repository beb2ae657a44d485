use proptest::prelude::*;
use simex_core::data::{contrast_for, error_set_from_replicates, estimate_sigma2, Contrast};
use simex_core::estimators::{logistic_fit, IrlsOptions};
use simex_core::extrapolant::{fit_extrapolant, ExtrapolantKind};
use simex_core::linalg::Matrix;
use simex_core::simex::{SimexTrace, TracePoint};
use simex_core::uncertainty::simex_variance;

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// Bernoulli data that overlap in x, so the MLE exists.
fn logistic_data(xs: &[f64], us: &[f64]) -> (Vec<f64>, Matrix) {
    let n = xs.len();
    let mut y: Vec<f64> = xs
        .iter()
        .zip(us)
        .map(|(x, u)| f64::from(*u < sigmoid(0.3 - 0.8 * x)))
        .collect();
    // Guarantee overlap at both ends.
    y[0] = 1.0;
    y[1] = 0.0;
    y[n - 2] = 1.0;
    y[n - 1] = 0.0;
    let mut data = Vec::with_capacity(2 * n);
    for x in xs {
        data.push(1.0);
        data.push(*x);
    }
    (y, Matrix::from_row_major(n, 2, data).unwrap())
}

/// Plain two-pass `Σ(x - x̄)² / (n - 1)`.
fn oracle_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn default_contrasts_are_valid(k in 2usize..=64) {
        let c = contrast_for(k).unwrap();
        let w = c.weights();
        prop_assert_eq!(w.len(), k);
        prop_assert!(w.iter().sum::<f64>().abs() < 1e-12);
        prop_assert!((w.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(Contrast::new(w.to_vec()).is_ok());
    }

    #[test]
    fn two_replicate_sigma2_matches_error_set(
        rows in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..200)
    ) {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|(a, b)| [*a, *b]).collect();
        let x = Matrix::from_row_major(n, 2, flat).unwrap();
        let (_, set) = error_set_from_replicates(&x, &contrast_for(2).unwrap()).unwrap();
        // With a = (1/2, -1/2) each pseudo-error is half the replicate difference.
        let from_set = 2.0 * set.values().iter().map(|e| e * e).sum::<f64>() / n as f64;
        let direct = estimate_sigma2(&x).unwrap();
        prop_assert!((from_set - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn quadratic_extrapolant_is_exact_on_quadratics(
        a in -100.0f64..100.0, b in -10.0f64..10.0, c in -5.0f64..5.0, m in 3usize..12
    ) {
        let pts: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                let l = 2.0 * i as f64 / (m - 1) as f64;
                (l, a + b * l + c * l * l)
            })
            .collect();
        let fit = fit_extrapolant(&pts, ExtrapolantKind::Quadratic).unwrap();
        let truth = a - b + c;
        prop_assert!((fit.extrapolate() - truth).abs() <= 1e-9 * (1.0 + a.abs() + b.abs() + c.abs()));
    }

    #[test]
    fn s_delta_sq_matches_sample_variance(
        cols in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 2..40), 3..6)
    ) {
        // Equal B at every λ keeps the trace well formed.
        let b = cols.iter().map(Vec::len).min().unwrap();
        let points: Vec<TracePoint> = cols
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let est: Vec<Vec<f64>> = c[..b].iter().map(|v| vec![*v]).collect();
                let mean = vec![c[..b].iter().sum::<f64>() / b as f64];
                TracePoint {
                    lambda: i as f64,
                    variances: Some(vec![vec![1.0]; b]),
                    estimates: est,
                    failures: 0,
                    mean,
                }
            })
            .collect();
        let trace = SimexTrace { replicates: b, points };
        let report = simex_variance(&trace, ExtrapolantKind::Quadratic).unwrap();
        for (c, s) in cols.iter().zip(&report.coordinates[0].s_delta_sq) {
            let o = oracle_variance(&c[..b]);
            prop_assert!((s - o).abs() <= f64::EPSILON * o.abs(), "{} vs {}", s, o);
        }
    }

    #[test]
    fn logistic_fit_satisfies_score_and_permutation(
        xs in prop::collection::vec(-3.0f64..3.0, 40..150),
        seed in any::<u64>()
    ) {
        let us: Vec<f64> = (0..xs.len())
            .map(|i| ((seed.wrapping_add(i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64) / (1u64 << 53) as f64)
            .collect();
        let (y, design) = logistic_data(&xs, &us);
        let opts = IrlsOptions::default();
        let fit = logistic_fit(&y, &design, &opts).unwrap();

        let mut score = [0.0f64; 2];
        for i in 0..y.len() {
            let r = design.row(i);
            let p = sigmoid(fit.coefficients[0] * r[0] + fit.coefficients[1] * r[1]);
            score[0] += (y[i] - p) * r[0];
            score[1] += (y[i] - p) * r[1];
        }
        prop_assert!(score.iter().all(|s| s.abs() <= 1e-8), "score {:?}", score);

        // Reversing the rows must not change the fit.
        let n = y.len();
        let ry: Vec<f64> = y.iter().rev().copied().collect();
        let rdata: Vec<f64> = (0..n).rev().flat_map(|i| design.row(i).to_vec()).collect();
        let rfit = logistic_fit(&ry, &Matrix::from_row_major(n, 2, rdata).unwrap(), &opts).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&rfit.coefficients) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}
