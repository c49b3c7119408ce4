//! Decision procedures: the classic KS test against a single CDF and the
//! conditional KS test against a `zeta`-indexed family.
//!
//! Both reject on the right tail: the null is rejected at level `alpha` when
//! the p-value falls below `alpha`.

use serde::{Deserialize, Serialize};

use crate::conditional::{pit_transform, ConditionalCdf, ObservationPair};
use crate::empirical::{ks_statistic_cdf, ks_statistic_uniform, SortedUnitSample};
use crate::error::{Error, Result};
use crate::kolmogorov::{p_value, Method, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Classic,
    Conditional,
}

/// Outcome of a KS-type test. Serializes to a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_kind: TestKind,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    /// The evaluator actually used, after resolving `auto`.
    pub mode: Method,
    pub alpha: f64,
    pub reject: bool,
}

impl TestReport {
    /// Builds a report for a statistic computed from `n` observations.
    pub fn from_statistic(
        test_kind: TestKind,
        statistic: f64,
        n: usize,
        alpha: f64,
        mode: Mode,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let p = p_value(statistic, n, mode)?;
        Ok(TestReport {
            test_kind,
            n,
            statistic,
            p_value: p,
            mode: mode.resolve(n),
            alpha,
            reject: p < alpha,
        })
    }

    /// Same data, different level.
    pub fn at_level(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(TestReport {
            alpha,
            reject: self.p_value < alpha,
            ..self.clone()
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Tests whether each `xi_i` follows `F_{zeta_i}` using `S_n`, the sup-distance
/// between the ECDF of `F_{zeta_i}(xi_i)` and the identity on `[0, 1]`.
pub fn conditional_ks_test<F>(
    pairs: &[ObservationPair],
    family: &F,
    alpha: f64,
    mode: Mode,
) -> Result<TestReport>
where
    F: ConditionalCdf + ?Sized,
{
    check_alpha(alpha)?;
    let ys = pit_transform(pairs, family)?;
    uniformity_test(&ys, TestKind::Conditional, alpha, mode)
}

/// Tests whether `xs` are draws from `cdf` using `D_n`.
pub fn classic_ks_test<F>(xs: &[f64], cdf: F, alpha: f64, mode: Mode) -> Result<TestReport>
where
    F: Fn(f64) -> f64,
{
    check_alpha(alpha)?;
    let statistic = ks_statistic_cdf(xs, cdf)?;
    TestReport::from_statistic(TestKind::Classic, statistic, xs.len(), alpha, mode)
}

pub(crate) fn uniformity_test(
    u: &SortedUnitSample,
    kind: TestKind,
    alpha: f64,
    mode: Mode,
) -> Result<TestReport> {
    TestReport::from_statistic(kind, ks_statistic_uniform(u), u.len(), alpha, mode)
}
