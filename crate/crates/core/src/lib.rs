//! Classic and conditional Kolmogorov-Smirnov goodness-of-fit tests.
//!
//! The conditional test handles pairs `(xi_i, zeta_i)` where each `xi_i` has
//! its own `zeta_i`-dependent CDF `F_{zeta_i}`. Mapping every observation
//! through its own CDF gives values that are i.i.d. uniform under the null, so
//! their sup-distance to the identity has the same law as the ordinary KS
//! statistic, without ever needing the distribution of `zeta`.

pub mod conditional;
pub mod empirical;
pub mod error;
pub mod kolmogorov;
pub mod monte_carlo;
pub mod testing;

pub use conditional::{
    pit_transform, sample_conditional, ConditionalCdf, ExponentialRate, Family, FixedZeta,
    NormalLocation, ObservationPair, TabulatedFamily, UniformWidth,
};
pub use empirical::{ecdf_eval, ks_statistic_cdf, ks_statistic_uniform, SortedUnitSample};
pub use error::{Error, Result};
pub use kolmogorov::{
    asymptotic_cdf, asymptotic_critical_value, critical_value, exact_cdf, p_value,
    KolmogorovDistribution, Method, Mode,
};
pub use monte_carlo::{
    meta_test, power_estimate, replicate_p_values, replicate_rng, run_replicates, simulate_pairs,
    MixtureComponent, PowerEstimate, Scenario, ScenarioFile, ZetaSampler,
};
pub use testing::{classic_ks_test, conditional_ks_test, TestKind, TestReport};
