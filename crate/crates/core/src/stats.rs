//! Sample statistics used by the experiments.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("ks_statistic needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::invalid("ks_statistic: NaN in sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS distance to a continuous CDF.
pub fn ks_distance_to_cdf(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    Ok(s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / m).abs())
            .max(((i + 1) as f64 / m - f).abs())
    }))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median (average of the two middle values for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// Empirical proportion with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
    pub estimate: f64,
    pub std_error: f64,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        let p = if trials == 0 {
            f64::NAN
        } else {
            successes as f64 / trials as f64
        };
        Self {
            successes,
            trials,
            estimate: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ks_examples() {
        assert_eq!(
            ks_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(ks_statistic(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[1.5]).unwrap(), 0.5);
        assert!(ks_statistic(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_ties_across_samples() {
        // F_a = F_b everywhere
        assert_eq!(
            ks_statistic(&[1.0, 1.0, 2.0], &[2.0, 1.0, 1.0]).unwrap(),
            0.0
        );
        assert!((ks_statistic(&[1.0, 1.0], &[1.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let p = 2.0 * normal_cdf(-1.0);
        assert!((p - 0.31731050786291415).abs() < 1e-9, "{p}");
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn proportion_se() {
        let p = Proportion::new(30, 100);
        assert!((p.std_error - (0.21f64 / 100.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ks_symmetric_and_rank_invariant(
            a in prop::collection::vec(-50.0f64..50.0, 1..40),
            b in prop::collection::vec(-50.0f64..50.0, 1..40),
        ) {
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
            let f = |x: &f64| (x / 10.0).exp() + x;
            let fa: Vec<f64> = a.iter().map(f).collect();
            let fb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(d, ks_statistic(&fa, &fb).unwrap());
        }
    }
}
