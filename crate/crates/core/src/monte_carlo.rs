//! Simulation harness for calibration and power studies.
//!
//! Every replicate gets its own generator, seeded from a SplitMix64 hash of
//! the scenario seed and the replicate index, so replicates are independent
//! streams and the output does not depend on how they are scheduled across
//! threads.

use std::fmt;
use std::path::Path;

use rand::distributions::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::Serialize;

use crate::conditional::{sample_conditional, ConditionalCdf, Family, ObservationPair};
use crate::empirical::{ks_statistic_uniform, SortedUnitSample};
use crate::error::{Error, Result};
use crate::kolmogorov::{exact_cdf, p_value, Mode};
use crate::testing::{uniformity_test, TestKind, TestReport};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Law of the conditioning variable in a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum ZetaSampler {
    /// Uniform on the open interval `(low, high)`.
    Uniform {
        low: f64,
        high: f64,
    },
    GaussianMixture(Vec<MixtureComponent>),
    PointMass(f64),
}

impl ZetaSampler {
    pub fn validate(&self) -> Result<()> {
        let err = |reason: String| {
            Err(Error::Scenario {
                key: "zeta_sampler".into(),
                reason,
            })
        };
        match self {
            ZetaSampler::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return err(format!(
                        "uniform needs finite low < high, got ({low}, {high})"
                    ));
                }
            }
            ZetaSampler::PointMass(c) => {
                if !c.is_finite() {
                    return err(format!("point mass must be finite, got {c}"));
                }
            }
            ZetaSampler::GaussianMixture(components) => {
                if components.is_empty() {
                    return err("mixture has no components".into());
                }
                for c in components {
                    if !(c.weight > 0.0 && c.weight.is_finite()) {
                        return err(format!("mixture weight {} is not positive", c.weight));
                    }
                    if !(c.sd > 0.0 && c.sd.is_finite()) || !c.mean.is_finite() {
                        return err(format!(
                            "mixture component N({}, {}) is invalid",
                            c.mean, c.sd
                        ));
                    }
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                    return err(format!("mixture weights sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ZetaSampler::Uniform { low, high } => {
                let u: f64 = rng.sample(Open01);
                low + (high - low) * u
            }
            ZetaSampler::PointMass(c) => *c,
            ZetaSampler::GaussianMixture(components) => {
                let pick: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = components[components.len() - 1];
                for c in components {
                    acc += c.weight;
                    if pick < acc {
                        chosen = *c;
                        break;
                    }
                }
                Normal::new(chosen.mean, chosen.sd)
                    .expect("validated component")
                    .sample(rng)
            }
        }
    }

    /// Parses `uniform:low=a,high=b`, `point-mass:value=c`, or
    /// `gaussian-mixture:weights=w1/w2,means=m1/m2,sds=s1/s2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let err = |reason: String| Error::Scenario {
            key: "zeta_sampler".into(),
            reason,
        };
        let spec = spec.trim();
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut params = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, found `{item}`")))?;
            params.push((k.trim(), v.trim()));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let allowed: &[&str] = match name.trim() {
            "uniform" => &["low", "high"],
            "point-mass" => &["value"],
            "gaussian-mixture" => &["weights", "means", "sds"],
            other => return Err(err(format!("unknown sampler `{other}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(err(format!("unknown key `{k}` for {name}")));
        }
        let number = |key: &str, text: &str| -> Result<f64> {
            text.parse::<f64>()
                .map_err(|_| err(format!("{key}: `{text}` is not a number")))
        };
        let required = |key: &str| get(key).ok_or_else(|| err(format!("{name} needs `{key}`")));
        let list = |key: &str| -> Result<Vec<f64>> {
            required(key)?
                .split('/')
                .map(|t| number(key, t.trim()))
                .collect()
        };
        let sampler = match name.trim() {
            "uniform" => ZetaSampler::Uniform {
                low: number("low", required("low")?)?,
                high: number("high", required("high")?)?,
            },
            "point-mass" => ZetaSampler::PointMass(number("value", required("value")?)?),
            _ => {
                let (w, m, s) = (list("weights")?, list("means")?, list("sds")?);
                if w.len() != m.len() || w.len() != s.len() {
                    return Err(err("weights, means and sds must have equal lengths".into()));
                }
                ZetaSampler::GaussianMixture(
                    w.into_iter()
                        .zip(m)
                        .zip(s)
                        .map(|((weight, mean), sd)| MixtureComponent { weight, mean, sd })
                        .collect(),
                )
            }
        };
        sampler.validate()?;
        Ok(sampler)
    }

    /// Rejects samplers that put positive probability on parameters the family
    /// cannot take. Gaussian mixtures are only checked at their means; their
    /// tails are caught per replicate.
    fn check_family(&self, family: &Family, key: &str) -> Result<()> {
        let probes: Vec<f64> = match self {
            ZetaSampler::Uniform { low, high } => {
                let eps = (high - low) * 1e-9;
                vec![low + eps, 0.5 * (low + high), high - eps]
            }
            ZetaSampler::PointMass(c) => vec![*c],
            ZetaSampler::GaussianMixture(cs) => cs.iter().map(|c| c.mean).collect(),
        };
        for z in probes {
            if let Err(reason) = family.check_zeta(z) {
                return Err(Error::Scenario {
                    key: key.into(),
                    reason: format!("{family} cannot take zeta = {z} drawn by {self}: {reason}"),
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ZetaSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZetaSampler::Uniform { low, high } => write!(f, "uniform:low={low},high={high}"),
            ZetaSampler::PointMass(c) => write!(f, "point-mass:value={c}"),
            ZetaSampler::GaussianMixture(cs) => {
                let join = |g: fn(&MixtureComponent) -> f64| {
                    cs.iter()
                        .map(|c| g(c).to_string())
                        .collect::<Vec<_>>()
                        .join("/")
                };
                write!(
                    f,
                    "gaussian-mixture:weights={},means={},sds={}",
                    join(|c| c.weight),
                    join(|c| c.mean),
                    join(|c| c.sd)
                )
            }
        }
    }
}

/// A simulation setup. `data_family` generates the observations and
/// `null_family` is the family under test; they coincide for calibration runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub zeta_sampler: ZetaSampler,
    pub null_family: Family,
    pub data_family: Family,
    pub n: usize,
    pub replicates: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Scenario {
                key: "n".into(),
                reason: "must be at least 1".into(),
            });
        }
        if self.replicates == 0 {
            return Err(Error::Scenario {
                key: "replicates".into(),
                reason: "must be at least 1".into(),
            });
        }
        self.zeta_sampler.validate()?;
        self.zeta_sampler
            .check_family(&self.null_family, "null_family")?;
        self.zeta_sampler
            .check_family(&self.data_family, "data_family")?;
        Ok(())
    }

    pub fn is_calibration(&self) -> bool {
        self.null_family == self.data_family
    }
}

/// A parsed scenario file: the scenario plus the test levels it asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    /// Level for the per-replicate rejection rate.
    pub alpha: f64,
    /// Level for the meta-test on the replicate statistics.
    pub meta_alpha: f64,
}

impl ScenarioFile {
    pub const DEFAULT_ALPHA: f64 = 0.05;
    pub const DEFAULT_META_ALPHA: f64 = 0.01;

    /// Parses `key = value` lines; `#` starts a comment. Required keys are
    /// `n`, `replicates`, `seed`, `zeta_sampler` and `null_family`;
    /// `data_family`, `alpha` and `meta_alpha` are optional.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Scenario {
                key: format!("line {}", lineno + 1),
                reason: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = k.trim().to_string();
            if entries.iter().any(|(e, _)| *e == key) {
                return Err(Error::Scenario {
                    key,
                    reason: "given more than once".into(),
                });
            }
            entries.push((key, v.trim().to_string()));
        }
        const KNOWN: [&str; 8] = [
            "n",
            "replicates",
            "seed",
            "zeta_sampler",
            "null_family",
            "data_family",
            "alpha",
            "meta_alpha",
        ];
        if let Some((k, _)) = entries.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Scenario {
                key: k.clone(),
                reason: "unknown key".into(),
            });
        }
        let get = |key: &str| {
            entries
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let required = |key: &str| {
            get(key).ok_or_else(|| Error::Scenario {
                key: key.into(),
                reason: "missing".into(),
            })
        };
        fn parsed<T: std::str::FromStr>(key: &str, text: &str) -> Result<T> {
            text.parse::<T>().map_err(|_| Error::Scenario {
                key: key.into(),
                reason: format!("cannot parse `{text}`"),
            })
        }
        let family = |key: &str, text: &str| {
            Family::parse(text, base_dir).map_err(|e| Error::Scenario {
                key: key.into(),
                reason: e.to_string(),
            })
        };
        let level = |key: &str, default: f64| -> Result<f64> {
            let a = match get(key) {
                Some(t) => parsed::<f64>(key, t)?,
                None => default,
            };
            if a > 0.0 && a < 1.0 {
                Ok(a)
            } else {
                Err(Error::Scenario {
                    key: key.into(),
                    reason: format!("{a} is not in (0, 1)"),
                })
            }
        };

        let null_family = family("null_family", required("null_family")?)?;
        let data_family = match get("data_family") {
            Some(t) => family("data_family", t)?,
            None => null_family.clone(),
        };
        let scenario = Scenario {
            zeta_sampler: ZetaSampler::parse(required("zeta_sampler")?)?,
            null_family,
            data_family,
            n: parsed("n", required("n")?)?,
            replicates: parsed("replicates", required("replicates")?)?,
            seed: parsed("seed", required("seed")?)?,
        };
        scenario.validate()?;
        Ok(ScenarioFile {
            scenario,
            alpha: level("alpha", Self::DEFAULT_ALPHA)?,
            meta_alpha: level("meta_alpha", Self::DEFAULT_META_ALPHA)?,
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for replicate `replicate` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let state = seed.wrapping_add(replicate.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    ChaCha8Rng::seed_from_u64(splitmix64(state))
}

/// The `n` observation pairs of one replicate: all `zeta` draws first, then
/// one uniform per pair for inverse-transform sampling of `xi`.
pub fn simulate_pairs(scenario: &Scenario, replicate: u64) -> Result<Vec<ObservationPair>> {
    let mut rng = replicate_rng(scenario.seed, replicate);
    let zetas: Vec<f64> = (0..scenario.n)
        .map(|_| scenario.zeta_sampler.sample(&mut rng))
        .collect();
    zetas
        .into_iter()
        .enumerate()
        .map(|(index, zeta)| {
            let u: f64 = rng.sample(Open01);
            sample_conditional(&scenario.data_family, zeta, u)
                .map(|xi| ObservationPair { xi, zeta })
                .map_err(|e| match e {
                    Error::InvalidZeta {
                        zeta,
                        family,
                        reason,
                        ..
                    } => Error::InvalidZeta {
                        index,
                        zeta,
                        family,
                        reason,
                    },
                    other => other,
                })
        })
        .collect()
}

fn replicate_statistic(scenario: &Scenario, replicate: u64) -> Result<f64> {
    let pairs = simulate_pairs(scenario, replicate)?;
    let ys = crate::conditional::pit_transform(&pairs, &scenario.null_family)?;
    Ok(ks_statistic_uniform(&ys))
}

/// Conditional KS statistic of every replicate, in replicate order.
pub fn run_replicates(scenario: &Scenario) -> Result<Vec<f64>> {
    scenario.validate()?;
    let results: Vec<Result<f64>> = (0..scenario.replicates)
        .into_par_iter()
        .map(|r| {
            replicate_statistic(scenario, r).map_err(|e| Error::Replicate {
                replicate: r,
                source: Box::new(e),
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Tests whether `statistics` follow the exact law of `D_n`, by mapping each
/// through `exact_cdf(n, .)` and testing the result for uniformity.
pub fn meta_test(statistics: &[f64], n: usize, alpha: f64) -> Result<TestReport> {
    if statistics.is_empty() {
        return Err(Error::EmptySample);
    }
    if n == 0 {
        return Err(Error::ZeroSampleSize);
    }
    if let Some(&s) = statistics.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::StatisticOutOfRange(s));
    }
    let u: Vec<f64> = statistics
        .par_iter()
        .map(|&s| exact_cdf(n, s))
        .collect::<Result<_>>()?;
    let u = SortedUnitSample::new(u)?;
    uniformity_test(&u, TestKind::Classic, alpha, Mode::Auto)
}

/// Right-tail p-value of each replicate statistic.
pub fn replicate_p_values(statistics: &[f64], n: usize, mode: Mode) -> Result<Vec<f64>> {
    statistics
        .par_iter()
        .map(|&s| p_value(s, n, mode))
        .collect()
}

/// Rejection rate of the conditional test across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub alpha: f64,
    pub replicates: u64,
    pub rejections: u64,
    pub rate: f64,
    /// Binomial standard error `sqrt(rate (1 - rate) / replicates)`.
    pub std_error: f64,
}

impl PowerEstimate {
    pub fn from_statistics(statistics: &[f64], n: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if statistics.is_empty() {
            return Err(Error::EmptySample);
        }
        let p = replicate_p_values(statistics, n, Mode::Auto)?;
        let rejections = p.iter().filter(|&&p| p < alpha).count() as u64;
        let replicates = statistics.len() as u64;
        let rate = rejections as f64 / replicates as f64;
        Ok(PowerEstimate {
            alpha,
            replicates,
            rejections,
            rate,
            std_error: (rate * (1.0 - rate) / replicates as f64).sqrt(),
        })
    }
}

/// Fraction of replicates whose conditional test rejects at `alpha`.
pub fn power_estimate(scenario: &Scenario, alpha: f64) -> Result<PowerEstimate> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let statistics = run_replicates(scenario)?;
    PowerEstimate::from_statistics(&statistics, scenario.n, alpha)
}
