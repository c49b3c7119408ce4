//! `condks`: classic and conditional KS tests from the command line.
//!
//! Exit codes: 0 success or non-rejection, 1 rejection, 2 usage or data error.

mod curve;
mod dataset;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use condks::monte_carlo::ScenarioFile;
use condks::{
    asymptotic_cdf, asymptotic_critical_value, classic_ks_test, conditional_ks_test,
    critical_value, exact_cdf, meta_test, p_value, pit_transform, run_replicates, simulate_pairs,
    ConditionalCdf, Family, Mode, PowerEstimate, TestReport,
};

#[derive(Parser)]
#[command(
    name = "condks",
    version,
    about = "Classic and conditional Kolmogorov-Smirnov tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a KS test on an `xi,zeta` dataset and print the JSON report.
    Test {
        input: PathBuf,
        /// Family spec, e.g. `normal-location:sigma=1`, `exponential-rate`,
        /// `tabulated:path=grid.csv`, `normal:mean=0,sd=1`.
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = Kind::Conditional)]
        kind: Kind,
    },
    /// Query the Kolmogorov distribution.
    #[command(allow_negative_numbers = true)]
    Dist {
        /// Sample size for the exact law (or for scaling with --asymptotic).
        #[arg(short = 'n', long = "n")]
        n: Option<usize>,
        /// Use the limiting law; without -n the argument is sqrt(n) D_n.
        #[arg(long)]
        asymptotic: bool,
        #[arg(value_enum)]
        query: Query,
        /// Statistic for cdf/pvalue, alpha for critical.
        argument: f64,
    },
    /// Print a CSV table of exact critical values.
    Table {
        #[arg(long = "n-max")]
        n_max: usize,
        #[arg(
            long = "alpha",
            value_delimiter = ',',
            default_value = "0.2,0.1,0.05,0.01"
        )]
        alphas: Vec<f64>,
    },
    /// Run a Monte-Carlo scenario; writes the statistics CSV and a JSON summary.
    Simulate {
        scenario: PathBuf,
        /// Statistics CSV to write.
        output: PathBuf,
        /// Summary JSON path (default: OUTPUT with extension `summary.json`).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write one simulated replicate of a scenario as an `xi,zeta` dataset.
    Generate {
        scenario: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Print `x,empirical,reference` rows for plotting the transformed ECDF.
    Curve {
        input: PathBuf,
        #[arg(long)]
        family: String,
        /// Number of equally spaced grid intervals on [0, 1]; 0 for jumps only.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Asymptotic,
    Auto,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Asymptotic => Mode::Asymptotic,
            ModeArg::Auto => Mode::Auto,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Classic,
    Conditional,
}

#[derive(Clone, Copy, ValueEnum)]
enum Query {
    Cdf,
    Pvalue,
    Critical,
}

enum Outcome {
    Accept,
    Reject,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test {
            input,
            family,
            alpha,
            mode,
            kind,
        } => cmd_test(&input, &family, alpha, mode.into(), kind),
        Command::Dist {
            n,
            asymptotic,
            query,
            argument,
        } => cmd_dist(n, asymptotic, query, argument),
        Command::Table { n_max, alphas } => cmd_table(n_max, &alphas),
        Command::Simulate {
            scenario,
            output,
            summary,
        } => cmd_simulate(&scenario, &output, summary.as_deref()),
        Command::Generate {
            scenario,
            output,
            replicate,
        } => cmd_generate(&scenario, &output, replicate),
        Command::Curve {
            input,
            family,
            grid,
        } => cmd_curve(&input, &family, grid),
    };
    match result {
        Ok(Outcome::Accept) => ExitCode::SUCCESS,
        Ok(Outcome::Reject) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_family(spec: &str) -> Result<Family> {
    Family::parse(spec, None).with_context(|| format!("family `{spec}`"))
}

/// Rewrites pair-index errors as 1-based data rows.
fn with_row(e: condks::Error) -> anyhow::Error {
    match &e {
        condks::Error::InvalidZeta { index, .. }
        | condks::Error::NonFinite { index }
        | condks::Error::CdfOutOfRange { index, .. } => anyhow::Error::new(e.clone())
            .context(format!("data row {} (line {})", index + 1, index + 2)),
        _ => anyhow::Error::new(e),
    }
}

fn cmd_test(input: &Path, family: &str, alpha: f64, mode: Mode, kind: Kind) -> Result<Outcome> {
    let family = parse_family(family)?;
    let pairs = dataset::read_pairs_path(input)?;
    let report = match kind {
        Kind::Conditional => conditional_ks_test(&pairs, &family, alpha, mode).map_err(with_row)?,
        Kind::Classic => {
            if !family.is_univariate() {
                bail!("the classic test needs a univariate family: pin zeta (e.g. `{family}:zeta=0`) or use `normal:mean=..,sd=..`");
            }
            let xs: Vec<f64> = pairs.iter().map(|p| p.xi).collect();
            classic_ks_test(&xs, |x| family.cdf(x, 0.0), alpha, mode).map_err(with_row)?
        }
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(if report.reject {
        Outcome::Reject
    } else {
        Outcome::Accept
    })
}

/// Twelve significant digits, `.` as decimal point.
fn sig12(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    format!("{rounded:?}")
}

fn cmd_dist(n: Option<usize>, asymptotic: bool, query: Query, arg: f64) -> Result<Outcome> {
    let value = match (n, asymptotic) {
        (None, false) => bail!("give -n <N> for the exact law or --asymptotic"),
        (Some(n), false) => match query {
            Query::Cdf => exact_cdf(n, arg)?,
            Query::Pvalue => p_value(arg, n, Mode::Exact)?,
            Query::Critical => critical_value(n, arg)?,
        },
        (None, true) => match query {
            Query::Cdf => asymptotic_cdf(arg),
            Query::Pvalue => 1.0 - asymptotic_cdf(arg),
            Query::Critical => asymptotic_critical_value(arg)?,
        },
        (Some(n), true) => {
            if n == 0 {
                bail!(condks::Error::ZeroSampleSize);
            }
            let root = (n as f64).sqrt();
            match query {
                Query::Cdf => asymptotic_cdf(root * arg),
                Query::Pvalue => p_value(arg, n, Mode::Asymptotic)?,
                Query::Critical => asymptotic_critical_value(arg)? / root,
            }
        }
    };
    if value.is_nan() {
        bail!("argument {arg} is not a number");
    }
    println!("{}", sig12(value));
    Ok(Outcome::Accept)
}

fn cmd_table(n_max: usize, alphas: &[f64]) -> Result<Outcome> {
    if n_max == 0 {
        bail!("--n-max must be at least 1");
    }
    if alphas.is_empty() {
        bail!("give at least one alpha");
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    write!(out, "n")?;
    for a in alphas {
        if !(*a > 0.0 && *a < 1.0) {
            bail!("alpha {a} is not in (0, 1)");
        }
        write!(out, ",{a}")?;
    }
    writeln!(out)?;
    for n in 1..=n_max {
        write!(out, "{n}")?;
        for &a in alphas {
            write!(out, ",{}", critical_value(n, a)?)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(Outcome::Accept)
}

#[derive(Serialize)]
struct ScenarioSummary {
    n: usize,
    replicates: u64,
    seed: u64,
    zeta_sampler: String,
    null_family: String,
    data_family: String,
    calibration: bool,
}

#[derive(Serialize)]
struct SimulationSummary {
    scenario: ScenarioSummary,
    meta_test: TestReport,
    rejection_rate: PowerEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    power: Option<PowerEstimate>,
}

fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ScenarioFile::parse(&text, path.parent()).with_context(|| path.display().to_string())
}

fn cmd_simulate(scenario_path: &Path, output: &Path, summary: Option<&Path>) -> Result<Outcome> {
    let file = load_scenario(scenario_path)?;
    let scenario = &file.scenario;
    let statistics = run_replicates(scenario)?;

    let mut csv = String::with_capacity(24 * (statistics.len() + 1));
    csv.push_str("statistic\n");
    for s in &statistics {
        csv.push_str(&format!("{s}\n"));
    }
    fs::write(output, csv).with_context(|| format!("cannot write {}", output.display()))?;

    let meta = meta_test(&statistics, scenario.n, file.meta_alpha)?;
    let rate = PowerEstimate::from_statistics(&statistics, scenario.n, file.alpha)?;
    let calibration = scenario.is_calibration();
    let report = SimulationSummary {
        scenario: ScenarioSummary {
            n: scenario.n,
            replicates: scenario.replicates,
            seed: scenario.seed,
            zeta_sampler: scenario.zeta_sampler.to_string(),
            null_family: scenario.null_family.to_string(),
            data_family: scenario.data_family.to_string(),
            calibration,
        },
        meta_test: meta.clone(),
        rejection_rate: rate,
        power: (!calibration).then_some(rate),
    };
    let json = serde_json::to_string_pretty(&report)?;
    let summary_path =
        summary.map_or_else(|| output.with_extension("summary.json"), Path::to_path_buf);
    fs::write(&summary_path, format!("{json}\n"))
        .with_context(|| format!("cannot write {}", summary_path.display()))?;
    println!("{json}");
    Ok(if calibration && meta.reject {
        Outcome::Reject
    } else {
        Outcome::Accept
    })
}

fn cmd_generate(scenario_path: &Path, output: &Path, replicate: u64) -> Result<Outcome> {
    let file = load_scenario(scenario_path)?;
    let pairs = simulate_pairs(&file.scenario, replicate)?;
    let mut buf = Vec::new();
    dataset::write_pairs(&mut buf, &pairs)?;
    fs::write(output, buf).with_context(|| format!("cannot write {}", output.display()))?;
    Ok(Outcome::Accept)
}

fn cmd_curve(input: &Path, family: &str, grid: usize) -> Result<Outcome> {
    let family = parse_family(family)?;
    let pairs = dataset::read_pairs_path(input)?;
    let ys = pit_transform(&pairs, &family).map_err(with_row)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    writeln!(out, "x,empirical,reference")?;
    for r in curve::curve_rows(&ys, grid) {
        writeln!(out, "{},{},{}", r.x, r.empirical, r.reference)?;
    }
    out.flush()?;
    Ok(Outcome::Accept)
}
