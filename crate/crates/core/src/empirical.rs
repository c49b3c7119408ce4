//! Empirical CDFs and the sup-distance statistics computed from order statistics.
//!
//! `|F_n(x) - x|` is piecewise linear between the jumps of `F_n`, so its
//! supremum over `[0, 1]` is reached at a jump, either just before it (the
//! left limit `(i - 1)/n`) or at it (`i/n`). The tails `[0, u_(1))` and
//! `[u_(n), 1]` are covered by the `i = 1` and `i = n` terms. Ties are
//! handled by the same formula; exactness of the null distribution still
//! assumes a continuous reference CDF.

use crate::error::{Error, Result};

/// Non-empty, sorted sample of values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedUnitSample {
    values: Vec<f64>,
}

impl SortedUnitSample {
    /// Validates and sorts raw values.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        check_unit_range(&values)?;
        values.sort_by(f64::total_cmp);
        Ok(SortedUnitSample { values })
    }

    /// Wraps values that must already be in non-decreasing order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        check_unit_range(&values)?;
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Unsorted { index: i + 1 });
        }
        Ok(SortedUnitSample { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

fn check_unit_range(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    for (index, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ValueOutOfRange { index, value });
        }
    }
    Ok(())
}

/// `(1/n) #{i : sample_i <= x}`.
pub fn ecdf_eval(sample: &[f64], x: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let count = sample.iter().filter(|&&s| s <= x).count();
    Ok(count as f64 / sample.len() as f64)
}

/// `sup_{x in [0,1]} |F_n(x) - x|` for the empirical CDF of `u`.
pub fn ks_statistic_uniform(u: &SortedUnitSample) -> f64 {
    let n = u.len() as f64;
    u.values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let above = (i + 1) as f64 / n - v;
            let below = v - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// `D_n = sup_x |F_n(x) - F(x)|` for observations `xs` against a reference CDF.
pub fn ks_statistic_cdf<F>(xs: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let u = map_through_cdf(xs, cdf)?;
    Ok(ks_statistic_uniform(&u))
}

pub(crate) fn map_through_cdf<F>(xs: &[f64], cdf: F) -> Result<SortedUnitSample>
where
    F: Fn(f64) -> f64,
{
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut u = Vec::with_capacity(xs.len());
    for (index, &x) in xs.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { index });
        }
        let value = cdf(x);
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::CdfOutOfRange { index, value });
        }
        u.push(value);
    }
    SortedUnitSample::new(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_sup(sample: &[f64], grid: usize) -> f64 {
        let mut points: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
        points.extend_from_slice(sample);
        let n = sample.len() as f64;
        let mut best: f64 = 0.0;
        for &x in &points {
            let right = sample.iter().filter(|&&s| s <= x).count() as f64 / n;
            let left = sample.iter().filter(|&&s| s < x).count() as f64 / n;
            best = best.max((right - x).abs()).max((left - x).abs());
        }
        best
    }

    #[test]
    fn ecdf_closed_interval() {
        assert_eq!(ecdf_eval(&[0.5], 0.5).unwrap(), 1.0);
        assert_eq!(ecdf_eval(&[0.5], 0.4999).unwrap(), 0.0);
        assert_eq!(ecdf_eval(&[0.2, 0.4, 0.9], 0.4).unwrap(), 2.0 / 3.0);
        assert_eq!(ecdf_eval(&[], 0.4), Err(Error::EmptySample));
    }

    #[test]
    fn statistic_small_cases() {
        let s = SortedUnitSample::new(vec![0.5]).unwrap();
        assert_eq!(ks_statistic_uniform(&s), 0.5);
        let s = SortedUnitSample::new(vec![0.75, 0.25]).unwrap();
        assert_eq!(ks_statistic_uniform(&s), 0.25);
        assert!((brute_force_sup(&[0.25, 0.75], 10_000) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn midpoints_minimise_the_statistic() {
        let n = 4;
        let mid: Vec<f64> = (1..=n)
            .map(|i| (2 * i - 1) as f64 / (2 * n) as f64)
            .collect();
        assert!((brute_force_sup(&mid, 100_000) - 0.125).abs() < 1e-12);
        let s = SortedUnitSample::from_sorted(mid).unwrap();
        assert!((ks_statistic_uniform(&s) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn ties_are_accepted() {
        let s = SortedUnitSample::new(vec![0.5, 0.5, 0.5, 0.1]).unwrap();
        let want = brute_force_sup(s.values(), 1000);
        assert!((ks_statistic_uniform(&s) - want).abs() < 1e-12);
        let s = SortedUnitSample::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(ks_statistic_uniform(&s), 0.5);
    }

    #[test]
    fn rejects_invalid_samples() {
        assert_eq!(SortedUnitSample::new(vec![]), Err(Error::EmptySample));
        assert_eq!(
            SortedUnitSample::new(vec![0.2, 1.5]),
            Err(Error::ValueOutOfRange {
                index: 1,
                value: 1.5
            })
        );
        assert!(SortedUnitSample::new(vec![f64::NAN]).is_err());
        assert_eq!(
            SortedUnitSample::from_sorted(vec![0.1, 0.3, 0.2]),
            Err(Error::Unsorted { index: 2 })
        );
    }

    #[test]
    fn cdf_statistic() {
        let median_at_zero = |x: f64| 0.5 * (1.0 + x / (1.0 + x.abs()));
        assert_eq!(ks_statistic_cdf(&[0.0], median_at_zero).unwrap(), 0.5);

        let quartiles = |x: f64| if x < 0.0 { 0.25 } else { 0.75 };
        assert_eq!(ks_statistic_cdf(&[-1.0, 1.0], quartiles).unwrap(), 0.25);

        let bad = |_: f64| 1.2;
        assert_eq!(
            ks_statistic_cdf(&[0.3], bad),
            Err(Error::CdfOutOfRange {
                index: 0,
                value: 1.2
            })
        );
        assert_eq!(ks_statistic_cdf(&[], |x| x), Err(Error::EmptySample));
        assert_eq!(
            ks_statistic_cdf(&[f64::INFINITY], |x| x),
            Err(Error::NonFinite { index: 0 })
        );
    }

    #[test]
    fn monotone_map_invariance() {
        let xs = [0.03, 0.5, 0.41, 0.77, 0.9, 0.12];
        let direct = ks_statistic_cdf(&xs, |x| x).unwrap();
        let squared: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let mapped = ks_statistic_cdf(&squared, |y: f64| y.sqrt()).unwrap();
        assert!((direct - mapped).abs() < 1e-15);
    }
}
