//! Summary statistics over Monte Carlo replications.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::uncertainty::Interval;

fn non_empty(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        Err(Error::TooFewObservations { needed: 1, found: 0 })
    } else {
        Ok(())
    }
}

pub fn mean(v: &[f64]) -> Result<f64> {
    non_empty(v)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Mean squared deviation from `truth`.
pub fn compute_mse(estimates: &[f64], truth: f64) -> Result<f64> {
    non_empty(estimates)?;
    Ok(estimates.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / estimates.len() as f64)
}

pub fn bias(estimates: &[f64], truth: f64) -> Result<f64> {
    Ok(mean(estimates)? - truth)
}

pub fn median(v: &[f64]) -> Result<f64> {
    non_empty(v)?;
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}

/// Fraction of intervals containing `truth`.
pub fn compute_coverage(intervals: &[Interval], truth: f64) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, found: 0 });
    }
    let mut hit = 0usize;
    for iv in intervals {
        iv.check()?;
        hit += usize::from(iv.contains(truth));
    }
    Ok(hit as f64 / intervals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_hand_values() {
        assert_eq!(compute_mse(&[2.0, 2.0], 2.0).unwrap(), 0.0);
        assert_eq!(compute_mse(&[1.0, 3.0], 2.0).unwrap(), 1.0);
        assert!(compute_mse(&[], 0.0).is_err());
    }

    #[test]
    fn coverage_hand_values() {
        let t = 1.5;
        assert_eq!(compute_coverage(&[Interval { lo: t, hi: t }; 3], t).unwrap(), 1.0);
        let ivs = [Interval { lo: 0.0, hi: 1.0 }, Interval { lo: 2.0, hi: 3.0 }];
        assert_eq!(compute_coverage(&ivs, t).unwrap(), 0.0);
        assert!(matches!(
            compute_coverage(&[Interval { lo: 1.0, hi: 0.0 }], t),
            Err(Error::MalformedInterval { .. })
        ));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
    }
}
