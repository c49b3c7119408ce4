//! The Kolmogorov distribution: the null law of the two-sided KS statistic.
//!
//! Two evaluators are provided. [`exact_cdf`] gives `P(D_n <= d)` for a finite
//! sample size, and [`asymptotic_cdf`] gives the limiting law `Q(x)` of
//! `sqrt(n) * D_n`.
//!
//! The exact evaluator uses the closed forms on the two outer pieces of the
//! support, `n! (2d - 1/n)^n` for `d <= 1/n` and `1 - 2 (1 - d)^n` for
//! `d >= 1 - 1/n`, and the Marsaglia-Tsang-Wang transition-matrix power in
//! between. The matrix power carries a decimal exponent alongside the
//! mantissa so that `n!/n^n * H^n` neither overflows nor underflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest sample size for which [`Mode::Auto`] uses the exact distribution.
pub const AUTO_EXACT_MAX_N: usize = 140;

/// Series terms with magnitude below this are dropped.
const SERIES_TOLERANCE: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 100_000;

/// Below this the asymptotic CDF is smaller than 1e-200 and is returned as 0.
const ASYMPTOTIC_ZERO_BELOW: f64 = 0.05;

/// Under this the alternating series loses relative accuracy to cancellation,
/// so the theta-function dual form is summed instead.
const DUAL_SERIES_BELOW: f64 = 1.0;

/// Bisection width for [`critical_value`].
pub const CRITICAL_VALUE_TOLERANCE: f64 = 1e-10;

const SCALE_HI: f64 = 1e140;
const SCALE_LO: f64 = 1e-140;
const SCALE_EXP: i32 = 140;

/// How the null distribution of the statistic is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Asymptotic,
    /// Exact for `n <= AUTO_EXACT_MAX_N`, asymptotic above.
    #[default]
    Auto,
}

impl Mode {
    /// The evaluator actually used for a sample of size `n`.
    pub fn resolve(self, n: usize) -> Method {
        match self {
            Mode::Exact => Method::Exact,
            Mode::Asymptotic => Method::Asymptotic,
            Mode::Auto if n <= AUTO_EXACT_MAX_N => Method::Exact,
            Mode::Auto => Method::Asymptotic,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "asymptotic" => Ok(Mode::Asymptotic),
            "auto" => Ok(Mode::Auto),
            other => Err(Error::InvalidFamily(format!(
                "unknown mode `{other}` (expected exact, asymptotic or auto)"
            ))),
        }
    }
}

/// A resolved evaluation method, as recorded in test reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Asymptotic,
}

/// Evaluator for the Kolmogorov distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KolmogorovDistribution {
    /// Law of `D_n` for a sample of size `n >= 1`.
    Exact { n: usize },
    /// Limiting law of `sqrt(n) D_n`.
    Asymptotic,
}

impl KolmogorovDistribution {
    pub fn exact(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroSampleSize);
        }
        Ok(KolmogorovDistribution::Exact { n })
    }

    /// CDF at `arg`: `d` for the exact law, `x = sqrt(n) d` for the asymptotic one.
    pub fn cdf(&self, arg: f64) -> f64 {
        match *self {
            KolmogorovDistribution::Exact { n } => exact_cdf_unchecked(n, arg),
            KolmogorovDistribution::Asymptotic => asymptotic_cdf(arg),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            KolmogorovDistribution::Exact { .. } => Method::Exact,
            KolmogorovDistribution::Asymptotic => Method::Asymptotic,
        }
    }
}

/// Kolmogorov's limiting CDF `Q(x) = 1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`.
pub fn asymptotic_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < ASYMPTOTIC_ZERO_BELOW {
        return 0.0;
    }
    let q = if x < DUAL_SERIES_BELOW {
        asymptotic_cdf_dual(x)
    } else {
        asymptotic_cdf_alternating(x)
    };
    q.clamp(0.0, 1.0)
}

fn asymptotic_cdf_alternating(x: f64) -> f64 {
    let x2 = x * x;
    let mut tail = 0.0;
    let mut sign = 1.0;
    for k in 1..=SERIES_MAX_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x2).exp();
        tail += sign * term;
        sign = -sign;
        let next = (k + 1) as f64;
        if (-2.0 * next * next * x2).exp() < SERIES_TOLERANCE {
            break;
        }
    }
    1.0 - 2.0 * tail
}

// Q(x) = sqrt(2 pi) / x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2)); all terms positive.
fn asymptotic_cdf_dual(x: f64) -> f64 {
    let w = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
    let mut sum = 0.0;
    for k in 1..=SERIES_MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        let term = (-odd * odd * w).exp();
        sum += term;
        if term <= SERIES_TOLERANCE * sum || term == 0.0 {
            break;
        }
    }
    (2.0 * std::f64::consts::PI).sqrt() / x * sum
}

/// `P(D_n <= d)` for a sample of `n` observations under a continuous null.
pub fn exact_cdf(n: usize, d: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroSampleSize);
    }
    if d.is_nan() {
        return Err(Error::StatisticOutOfRange(d));
    }
    Ok(exact_cdf_unchecked(n, d))
}

fn exact_cdf_unchecked(n: usize, d: f64) -> f64 {
    let nf = n as f64;
    let nd = nf * d;
    if 2.0 * nd <= 1.0 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    if nd <= 1.0 {
        // n! (2d - 1/n)^n, accumulated as a product of factors i (2nd - 1) / n <= 1.
        let t = (2.0 * nd - 1.0) / nf;
        return (1..=n).fold(1.0, |acc, i| acc * (i as f64 * t));
    }
    if d >= 1.0 - 1.0 / nf {
        return 1.0 - 2.0 * (1.0 - d).powi(n as i32);
    }
    // Massart's DKW bound: 1 - P(D_n <= d) <= 2 exp(-2 n d^2), and 1 - 2^-54 rounds to 1.
    if 2.0 * (-2.0 * nf * d * d).exp() < f64::EPSILON / 4.0 {
        return 1.0;
    }
    mtw_cdf(n, d).clamp(0.0, 1.0)
}

/// Dense square matrix in row-major order.
#[derive(Clone)]
struct Square {
    m: usize,
    data: Vec<f64>,
}

impl Square {
    fn mul(&self, other: &Square) -> Square {
        let m = self.m;
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            let row = &mut out[i * m..(i + 1) * m];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == 0.0 {
                    continue;
                }
                let other_row = &other.data[k * m..(k + 1) * m];
                for (o, &b) in row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Square { m, data: out }
    }

    fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

/// `H^n` as a mantissa matrix and a base-10 exponent.
fn matrix_power(h: &Square, n: usize) -> (Square, i32) {
    if n == 1 {
        return (h.clone(), 0);
    }
    let (half, half_exp) = matrix_power(h, n / 2);
    let mut v = half.mul(&half);
    let mut exp = 2 * half_exp;
    if n % 2 == 1 {
        v = h.mul(&v);
    }
    let centre = v.m / 2;
    if v.data[centre * v.m + centre] > SCALE_HI {
        v.scale(SCALE_LO);
        exp += SCALE_EXP;
    }
    (v, exp)
}

fn mtw_cdf(n: usize, d: f64) -> f64 {
    let nf = n as f64;
    let k = (nf * d).ceil() as usize;
    let m = 2 * k - 1;
    let h = k as f64 - nf * d;

    let mut data = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                data[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        data[i * m] -= h.powi(i as i32 + 1);
        data[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        data[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                let span = i + 1 - j;
                for g in 1..=span {
                    data[i * m + j] /= g as f64;
                }
            }
        }
    }

    let (power, mut exp) = matrix_power(&Square { m, data }, n);
    let mut s = power.data[(k - 1) * m + (k - 1)];
    for i in 1..=n {
        s = s * i as f64 / nf;
        if s < SCALE_LO {
            s *= SCALE_HI;
            exp -= SCALE_EXP;
        }
    }
    s * 10f64.powi(exp)
}

/// Right-tail probability of an observed statistic under the null.
pub fn p_value(statistic: f64, n: usize, mode: Mode) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroSampleSize);
    }
    if !(0.0..=1.0).contains(&statistic) {
        return Err(Error::StatisticOutOfRange(statistic));
    }
    Ok(match mode.resolve(n) {
        Method::Exact => 1.0 - exact_cdf_unchecked(n, statistic),
        Method::Asymptotic => 1.0 - asymptotic_cdf((n as f64).sqrt() * statistic),
    })
}

/// Smallest `d` with `exact_cdf(n, d) >= 1 - alpha`, to within
/// [`CRITICAL_VALUE_TOLERANCE`].
pub fn critical_value(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::ZeroSampleSize);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let target = 1.0 - alpha;
    let nf = n as f64;

    let upper_piece = 1.0 - 1.0 / nf;
    if n == 1 || target >= exact_cdf_unchecked(n, upper_piece) {
        // Invert 1 - 2 (1 - d)^n = 1 - alpha, then step past any rounding shortfall.
        let mut d = (1.0 - (alpha / 2.0).powf(1.0 / nf)).max(upper_piece);
        while exact_cdf_unchecked(n, d) < target {
            d = d.next_up();
        }
        return Ok(d);
    }

    let mut lo = 0.5 / nf;
    let mut hi = 1.0;
    while hi - lo > CRITICAL_VALUE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if exact_cdf_unchecked(n, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `x` with `asymptotic_cdf(x) >= 1 - alpha`, by bisection.
pub fn asymptotic_critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, 1.0);
    while asymptotic_cdf(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > CRITICAL_VALUE_TOLERANCE * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if asymptotic_cdf(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptotic_edges() {
        assert_eq!(asymptotic_cdf(0.0), 0.0);
        assert_eq!(asymptotic_cdf(-3.0), 0.0);
        assert!((asymptotic_cdf(4.0) - 1.0).abs() < 1e-12);
        assert_eq!(asymptotic_cdf(0.04), 0.0);
    }

    #[test]
    fn asymptotic_at_the_five_percent_point() {
        // mpmath, 40 digits, 50-term partial sum.
        assert!((asymptotic_cdf(1.3581) - 0.950_000_369_568_332_6).abs() < 1e-12);
        assert!((asymptotic_cdf(1.0) - 0.730_000_328_322_645_5).abs() < 1e-12);
        assert!((asymptotic_cdf(0.3) - 9.305_801_334_566_632e-6).abs() < 1e-15);
    }

    #[test]
    fn series_forms_agree_at_the_switch() {
        let x = DUAL_SERIES_BELOW;
        let a = asymptotic_cdf_alternating(x);
        let b = asymptotic_cdf_dual(x);
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        for &x in &[0.6, 0.8, 1.2, 1.5] {
            let a = asymptotic_cdf_alternating(x);
            let b = asymptotic_cdf_dual(x);
            assert!((a - b).abs() < 1e-14, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn exact_rejects_zero_n() {
        assert_eq!(exact_cdf(0, 0.5), Err(Error::ZeroSampleSize));
        assert!(KolmogorovDistribution::exact(0).is_err());
    }

    #[test]
    fn exact_support_edges() {
        for n in [1, 2, 7, 40, 300] {
            assert_eq!(exact_cdf(n, 0.5 / n as f64 - 1e-9).unwrap(), 0.0);
            assert_eq!(exact_cdf(n, 1.0).unwrap(), 1.0);
            assert_eq!(exact_cdf(n, 1.5).unwrap(), 1.0);
        }
    }

    #[test]
    fn exact_n1_is_linear() {
        for i in 0..=20 {
            let d = 0.5 + 0.025 * i as f64;
            assert!((exact_cdf(1, d).unwrap() - (2.0 * d - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_route_meets_closed_forms() {
        // Just inside the matrix region on either side, compared with the closed
        // forms evaluated just outside it.
        for n in [3usize, 5, 10, 25] {
            let nf = n as f64;
            let lo = 1.0 / nf;
            let a = mtw_cdf(n, lo + 1e-12);
            let b = exact_cdf_unchecked(n, lo);
            assert!((a - b).abs() < 1e-9, "n={n} lower: {a} vs {b}");
            let hi = 1.0 - 1.0 / nf;
            let a = mtw_cdf(n, hi - 1e-12);
            let b = exact_cdf_unchecked(n, hi);
            assert!((a - b).abs() < 1e-9, "n={n} upper: {a} vs {b}");
        }
    }

    #[test]
    fn exact_matches_reference_values() {
        // scipy.stats.kstwo.cdf
        let cases = [
            (5, 0.3, 0.33599999999999997),
            (5, 0.4, 0.6912000000000005),
            (5, 0.5, 0.888),
            (20, 0.1, 0.023744905407845036),
            (20, 0.2, 0.647279826376585),
            (20, 0.3, 0.9569329333414838),
            (20, 0.4, 0.9978810778179642),
            (100, 0.1, 0.7473072429936126),
            (100, 0.2, 0.9994448072672011),
            (100, 0.3, 0.9999999822801301),
        ];
        for (n, d, want) in cases {
            let got = exact_cdf(n, d).unwrap();
            assert!((got - want).abs() < 1e-12, "n={n} d={d}: {got} vs {want}");
        }
    }

    #[test]
    fn exact_large_n_stays_finite() {
        let n = 10_000;
        let mut prev = 0.0;
        for i in 1..=60 {
            let d = 0.0005 * i as f64;
            let p = exact_cdf(n, d).unwrap();
            assert!(p.is_finite() && (0.0..=1.0).contains(&p));
            assert!(p >= prev - 1e-12, "d={d}");
            prev = p;
        }
        let x: f64 = 1.0;
        let exact = exact_cdf(n, x / (n as f64).sqrt()).unwrap();
        assert!((exact - asymptotic_cdf(x)).abs() < 5e-3);
    }

    #[test]
    fn p_value_complements_cdf() {
        assert_eq!(p_value(1.0, 12, Mode::Exact).unwrap(), 0.0);
        assert_eq!(p_value(0.5, 1, Mode::Exact).unwrap(), 1.0);
        let d = 0.23;
        assert_eq!(
            p_value(d, 20, Mode::Exact).unwrap() + exact_cdf(20, d).unwrap(),
            1.0
        );
        assert!(p_value(1.2, 3, Mode::Exact).is_err());
        assert!(p_value(-0.1, 3, Mode::Auto).is_err());
        assert!(p_value(f64::NAN, 3, Mode::Auto).is_err());
    }

    #[test]
    fn auto_threshold() {
        assert_eq!(Mode::Auto.resolve(140), Method::Exact);
        assert_eq!(Mode::Auto.resolve(141), Method::Asymptotic);
        for i in 1..=10 {
            let d = 0.002 * i as f64;
            let a = p_value(d, 10_000, Mode::Auto).unwrap();
            let b = p_value(d, 10_000, Mode::Asymptotic).unwrap();
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn critical_value_closed_form_n1() {
        assert_eq!(critical_value(1, 0.05).unwrap(), 0.975);
    }

    #[test]
    fn critical_value_matches_reference() {
        // scipy.stats.kstwo.isf
        let v = critical_value(20, 0.05).unwrap();
        assert!((v - 0.2940753144343292).abs() < 1e-9);
        let v = critical_value(100, 0.05).unwrap();
        assert!((v - 0.13402791648569778).abs() < 1e-9);
        let v = critical_value(5, 0.1).unwrap();
        assert!((v - 0.5094493282201105).abs() < 1e-9);
    }

    #[test]
    fn critical_value_near_alpha_one_hits_lower_endpoint() {
        // Inverse of n! (2d - 1/n)^n on the lowest piece of the support.
        for (n, alpha) in [(1usize, 1.0 - 1e-12), (4, 1.0 - 1e-9), (30, 1.0 - 1e-12)] {
            let nf = n as f64;
            let factorial: f64 = (1..=n).map(|i| i as f64).product();
            let want = (((1.0 - alpha) / factorial).powf(1.0 / nf) + 1.0 / nf) / 2.0;
            let v = critical_value(n, alpha).unwrap();
            assert!((v - want).abs() < 1e-9, "n={n}: {v} vs {want}");
            assert!(v > 0.5 / nf);
        }
        let a = critical_value(4, 0.9).unwrap();
        let b = critical_value(4, 0.999).unwrap();
        let c = critical_value(4, 1.0 - 1e-9).unwrap();
        assert!(a > b && b > c && c - 0.125 < 1e-2);
    }

    #[test]
    fn asymptotic_critical_values() {
        // scipy.stats.kstwobign.isf
        assert!((asymptotic_critical_value(0.05).unwrap() - 1.3580986393225507).abs() < 1e-10);
        assert!((asymptotic_critical_value(0.01).unwrap() - 1.6276236115189504).abs() < 1e-10);
        assert!(asymptotic_critical_value(1.0).is_err());
    }

    #[test]
    fn critical_value_rejects_bad_alpha() {
        for a in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(critical_value(10, a), Err(Error::InvalidAlpha(_))));
        }
        assert_eq!(critical_value(0, 0.05), Err(Error::ZeroSampleSize));
    }
}
