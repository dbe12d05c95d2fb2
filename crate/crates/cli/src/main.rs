//! Command-line front end. Four subcommands cover the workflows the library
//! supports: evaluating or optimizing the Gaussian scheme with its oracle
//! cross-check, sweeping the benchmark scenarios to CSV, running the seeded
//! verification sweeps, and searching a finite channel's achievable region.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 the request was
//! infeasible for the channel, 64 unusable invocation, 65 malformed input
//! data, 74 input/output failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rate_region_core::discrete::{AuxSizes, DiscreteChannelSpec, DiscreteError};
use rate_region_core::gaussian::{
    optimize_sum_rate, scenario_sweep, sum_rate, GaussianMacConfig, PowerSplit,
};
use rate_region_core::oracle::{build_scheme_covariance, GammaOffsets};
use rate_region_core::region::write_frontier_csv;
use rate_region_core::sweeps::{sweep_cross_state_identity, sweep_gaussian_identities, CheckRecord};
use serde::Serialize;
use thiserror::Error;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;

/// Agreement required between the closed form and the covariance oracle for
/// `gaussian-sum-rate` to report success.
const ORACLE_AGREEMENT_TOLERANCE: f64 = 1e-9;
/// Slack allowed when checking that each scenario region contains its
/// predecessor in the sweep.
const NESTING_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rate-region",
    version,
    about = "Rate regions of the two-user state-dependent MAC with cribbing encoders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate or optimize the Gaussian scheme and cross-check the oracle
    GaussianSumRate(GaussianSumRateArgs),
    /// Sweep the benchmark scenarios and write their frontiers to CSV
    Scenarios(ScenariosArgs),
    /// Run the seeded verification sweeps and report each check
    Verify(VerifyArgs),
    /// Search a finite channel's achievable region and write the frontier
    DiscreteRegion(DiscreteRegionArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// Transmit power of encoder 1
    #[arg(long, allow_negative_numbers = true)]
    p1: f64,
    /// Transmit power of encoder 2
    #[arg(long, allow_negative_numbers = true)]
    p2: f64,
    /// Variance of the common state
    #[arg(long, allow_negative_numbers = true)]
    q0: f64,
    /// Variance of encoder 1's private state
    #[arg(long, allow_negative_numbers = true)]
    q1: f64,
    /// Variance of encoder 2's private state
    #[arg(long, allow_negative_numbers = true)]
    q2: f64,
    /// Variance of the receiver noise
    #[arg(long, allow_negative_numbers = true)]
    n: f64,
}

impl ChannelArgs {
    fn config(&self) -> Result<GaussianMacConfig, CliError> {
        GaussianMacConfig::new(self.p1, self.p2, self.q0, self.q1, self.q2, self.n)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn echo(&self, parameters: &mut BTreeMap<String, String>) {
        parameters.insert("p1".into(), self.p1.to_string());
        parameters.insert("p2".into(), self.p2.to_string());
        parameters.insert("q0".into(), self.q0.to_string());
        parameters.insert("q1".into(), self.q1.to_string());
        parameters.insert("q2".into(), self.q2.to_string());
        parameters.insert("n".into(), self.n.to_string());
    }
}

#[derive(Args)]
struct GaussianSumRateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Coding fraction of encoder 1 (give all four split flags, or none to
    /// optimize over splits)
    #[arg(long, allow_negative_numbers = true)]
    eta1: Option<f64>,
    /// Coding fraction of encoder 2
    #[arg(long, allow_negative_numbers = true)]
    eta2: Option<f64>,
    /// Common-stream share of encoder 1's coding power
    #[arg(long, allow_negative_numbers = true)]
    alpha1: Option<f64>,
    /// Common-stream share of encoder 2's coding power
    #[arg(long, allow_negative_numbers = true)]
    alpha2: Option<f64>,
}

#[derive(Args)]
struct ScenariosArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// CSV file to write the five scenario frontiers to
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random draws per check
    #[arg(long, default_value_t = 200)]
    draws: u64,
    /// Seed of the draw sequence
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Offset added to the common-stream estimator coefficient; a nonzero
    /// value is a negative control and makes the orthogonality check fail
    #[arg(long, allow_negative_numbers = true)]
    perturb_gamma: Option<f64>,
}

#[derive(Args)]
struct DiscreteRegionArgs {
    /// Channel description (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Exact number of bound evaluations to spend
    #[arg(long, default_value_t = 5000)]
    budget: u64,
    /// Seed of the search
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// CSV file to write the searched frontier to
    #[arg(long)]
    out: PathBuf,
    /// Override the time-sharing alphabet size
    #[arg(long)]
    aux_u: Option<usize>,
    /// Override encoder 1's binning alphabet size
    #[arg(long)]
    aux_v1: Option<usize>,
    /// Override encoder 2's binning alphabet size
    #[arg(long)]
    aux_v2: Option<usize>,
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    parameters: BTreeMap<String, String>,
    seed: Option<u64>,
    tool_version: &'static str,
    duration_seconds: f64,
}

impl RunManifest {
    fn new(command: &'static str, parameters: BTreeMap<String, String>, seed: Option<u64>) -> Self {
        Self {
            command,
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            duration_seconds: 0.0,
        }
    }
}

fn manifest_path_for(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Writes the artifact and its manifest sidecar. Callers finish all
/// computation and validation first, so a rejected invocation never leaves
/// files behind.
fn write_with_manifest(path: &Path, body: &str, manifest: &RunManifest) -> Result<(), CliError> {
    let manifest_body = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Io(format!("encoding manifest: {e}")))?;
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    let sidecar = manifest_path_for(path);
    std::fs::write(&sidecar, manifest_body + "\n")
        .map_err(|e| CliError::Io(format!("writing {}: {e}", sidecar.display())))?;
    Ok(())
}

fn configure_threads() {
    let Ok(raw) = std::env::var("RATE_REGION_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(threads) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
            {
                eprintln!("warning: RATE_REGION_THREADS not applied: {e}");
            }
        }
        Err(_) => {
            eprintln!(
                "warning: RATE_REGION_THREADS must be a non-negative integer, \
                 got {raw:?}; using the automatic thread count"
            );
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            let _ = e.print();
            return match kind {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::GaussianSumRate(args) => cmd_gaussian_sum_rate(args),
        Command::Scenarios(args) => cmd_scenarios(args),
        Command::Verify(args) => cmd_verify(args),
        Command::DiscreteRegion(args) => cmd_discrete_region(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[derive(Serialize)]
struct SplitEcho {
    eta1: f64,
    eta2: f64,
    alpha1: f64,
    alpha2: f64,
}

#[derive(Serialize)]
struct SumRateOutput {
    split: SplitEcho,
    sum_rate_bits: f64,
    oracle_sum_rate_bits: f64,
    delta: f64,
}

fn cmd_gaussian_sum_rate(args: GaussianSumRateArgs) -> Result<ExitCode, CliError> {
    let cfg = args.channel.config()?;
    let given = [args.eta1, args.eta2, args.alpha1, args.alpha2];
    let (split, value) = match given {
        [None, None, None, None] => optimize_sum_rate(&cfg),
        [Some(eta1), Some(eta2), Some(alpha1), Some(alpha2)] => {
            let split = PowerSplit::new(eta1, eta2, alpha1, alpha2)
                .map_err(|e| CliError::Infeasible(e.to_string()))?;
            let value = sum_rate(&cfg, &split).map_err(|e| CliError::Infeasible(e.to_string()))?;
            (split, value)
        }
        _ => {
            return Err(CliError::Usage(
                "give all of --eta1 --eta2 --alpha1 --alpha2, or none of them to optimize".into(),
            ))
        }
    };
    let scheme =
        build_scheme_covariance(&cfg, &split).map_err(|e| CliError::Infeasible(e.to_string()))?;
    let oracle = scheme
        .oracle_sum_rate()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let delta = (value - oracle).abs();
    let output = SumRateOutput {
        split: SplitEcho {
            eta1: split.eta1(),
            eta2: split.eta2(),
            alpha1: split.alpha1(),
            alpha2: split.alpha2(),
        },
        sum_rate_bits: value,
        oracle_sum_rate_bits: oracle,
        delta,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&output).map_err(|e| CliError::Io(e.to_string()))?
    );
    Ok(if delta < ORACLE_AGREEMENT_TOLERANCE {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}

fn cmd_scenarios(args: ScenariosArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let cfg = args.channel.config()?;
    let sweep = scenario_sweep(&cfg);

    let rows: Vec<(&str, &rate_region_core::region::RateRegion)> = sweep
        .iter()
        .map(|(id, region)| (id.tag(), region))
        .collect();
    let mut csv = Vec::new();
    write_frontier_csv(&mut csv, &rows).map_err(|e| CliError::Io(e.to_string()))?;
    let csv = String::from_utf8(csv).expect("frontier CSV is ASCII");

    let mut nested = true;
    for pair in sweep.windows(2) {
        if !pair[1].1.contains(&pair[0].1, NESTING_SLACK) {
            nested = false;
        }
    }
    for (id, region) in &sweep {
        println!("{:<24} sum {:.6}", id.tag(), region.support(1.0, 1.0));
    }
    println!("nesting chain: {}", if nested { "pass" } else { "fail" });

    let mut parameters = BTreeMap::new();
    args.channel.echo(&mut parameters);
    parameters.insert("out".into(), args.out.display().to_string());
    let mut manifest = RunManifest::new("scenarios", parameters, None);
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    write_with_manifest(&args.out, &csv, &manifest)?;

    Ok(if nested {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}

#[derive(Serialize)]
struct VerifyOutput {
    draws: u64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    perturb_gamma: Option<f64>,
    checks: Vec<CheckRecord>,
    all_pass: bool,
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    if args.draws == 0 {
        eprintln!("warning: --draws 0 examines nothing; every check passes vacuously");
    }
    let offsets = GammaOffsets {
        gamma0: args.perturb_gamma.unwrap_or(0.0),
        ..GammaOffsets::default()
    };
    let gaussian = sweep_gaussian_identities(args.draws, args.seed, &offsets)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let cross = sweep_cross_state_identity(args.draws, args.seed)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let checks = vec![
        gaussian.orthogonality,
        gaussian.state_decoupling,
        gaussian.closed_form_vs_oracle,
        gaussian.joint_bound_identity,
        cross,
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    let output = VerifyOutput {
        draws: args.draws,
        seed: args.seed,
        perturb_gamma: args.perturb_gamma,
        checks,
        all_pass,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&output).map_err(|e| CliError::Io(e.to_string()))?
    );
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}

/// JSON pointer to the offending element of a rejected channel spec, where
/// one can be named. Row-level diagnostics point at the row's first cell,
/// which needs the y alphabet size from the raw document.
fn spec_error_pointer(err: &DiscreteError, text: &str) -> Option<String> {
    let output_size = || {
        serde_json::from_str::<serde_json::Value>(text)
            .ok()?
            .get("alphabets")?
            .get("y")?
            .as_u64()
            .map(|y| y as usize)
    };
    match err {
        DiscreteError::EmptyAlphabet { name } => Some(format!("/alphabets/{name}")),
        DiscreteError::UnexpectedS0 | DiscreteError::MissingS0 => {
            Some("/alphabets/s0".to_string())
        }
        DiscreteError::StatePmfLength { .. } | DiscreteError::StatePmfUnnormalized { .. } => {
            Some("/state_pmf".to_string())
        }
        DiscreteError::StatePmfNegative { index, .. }
        | DiscreteError::StateNotIndependent { index, .. } => {
            Some(format!("/state_pmf/{index}"))
        }
        DiscreteError::TransitionLength { .. } => Some("/transition".to_string()),
        DiscreteError::TransitionNegative { index, .. } => Some(format!("/transition/{index}")),
        DiscreteError::TransitionRowUnnormalized { row, .. } => match output_size() {
            Some(y) => Some(format!("/transition/{}", row * y)),
            None => Some("/transition".to_string()),
        },
        _ => None,
    }
}

fn cmd_discrete_region(args: DiscreteRegionArgs) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", args.spec.display())))?;
    let spec = DiscreteChannelSpec::from_json(&text).map_err(|e| {
        match spec_error_pointer(&e, &text) {
            Some(pointer) => CliError::Data(format!("{e} (at {pointer})")),
            None => CliError::Data(e.to_string()),
        }
    })?;
    let mut sizes = AuxSizes::default_for(&spec);
    if let Some(u) = args.aux_u {
        sizes.u = u;
    }
    if let Some(v1) = args.aux_v1 {
        sizes.v1 = v1;
    }
    if let Some(v2) = args.aux_v2 {
        sizes.v2 = v2;
    }
    let region =
        rate_region_core::discrete::search_region(&spec, &sizes, args.budget, args.seed).map_err(
            |e| match e {
                DiscreteError::CapacityExceeded { .. } => CliError::Infeasible(e.to_string()),
                DiscreteError::ZeroBudget | DiscreteError::EmptyAux { .. } => {
                    CliError::Usage(e.to_string())
                }
                other => CliError::Data(other.to_string()),
            },
        )?;

    let mut csv = Vec::new();
    write_frontier_csv(&mut csv, &[(spec.form().tag(), &region)])
        .map_err(|e| CliError::Io(e.to_string()))?;
    let csv = String::from_utf8(csv).expect("frontier CSV is ASCII");

    println!(
        "searched {} region with budget {}: max r1 {:.6}, max r2 {:.6}, max sum {:.6}",
        spec.form().tag(),
        args.budget,
        region.support(1.0, 0.0),
        region.support(0.0, 1.0),
        region.support(1.0, 1.0),
    );

    let mut parameters = BTreeMap::new();
    parameters.insert("spec".into(), args.spec.display().to_string());
    parameters.insert("budget".into(), args.budget.to_string());
    parameters.insert("out".into(), args.out.display().to_string());
    parameters.insert("aux_u".into(), sizes.u.to_string());
    parameters.insert("aux_v1".into(), sizes.v1.to_string());
    parameters.insert("aux_v2".into(), sizes.v2.to_string());
    let mut manifest = RunManifest::new("discrete-region", parameters, Some(args.seed));
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    write_with_manifest(&args.out, &csv, &manifest)?;

    Ok(ExitCode::SUCCESS)
}
