mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Emitter, Format};

pub const SEED_ENV: &str = "CONIC_MODULI_SEED";

#[derive(Parser, Debug)]
#[command(name = "conic-moduli", version, about = "Conical constant-curvature surfaces with coalescing cone points")]
pub struct Cli {
    /// Seed for randomized sampling (default from $CONIC_MODULI_SEED, else 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with default parameters; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Strata of the compactified configuration space, one row per cluster tree.
    Faces(FacesArgs),
    #[command(subcommand)]
    Charts(ChartsCmd),
    #[command(subcommand)]
    Cones(ConesCmd),
    #[command(subcommand)]
    Flat(FlatCmd),
    #[command(subcommand)]
    Phg(PhgCmd),
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Slope report for a CSV family emitted by `solve`.
    Fit(FitArgs),
}

#[derive(Args, Debug)]
pub struct FacesArgs {
    #[arg(long)]
    pub k: Option<usize>,
    /// Also allow singleton clusters.
    #[arg(long)]
    pub augmented: bool,
    /// Trees with a marked vertex (strata of the maximal collision face).
    #[arg(long)]
    pub cmax: bool,
}

#[derive(Subcommand, Debug)]
pub enum ChartsCmd {
    /// Sample a blow-up chart and check the b-fibration pullbacks.
    Verify(ChartsVerifyArgs),
}

#[derive(Args, Debug)]
pub struct ChartsVerifyArgs {
    /// two | three-corner
    #[arg(long)]
    pub chart: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sampling radius (default 1 for two, 0.3 for three-corner).
    #[arg(long)]
    pub region: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum ConesCmd {
    /// Verdict for every merge of cone points.
    Classify(ConesClassifyArgs),
}

#[derive(Args, Debug)]
pub struct ConesClassifyArgs {
    #[arg(long)]
    pub genus: Option<u32>,
    /// -1, 0 or 1
    #[arg(long, allow_hyphen_values = true)]
    pub curvature: Option<i32>,
    /// Comma-separated angle parameters, e.g. 1/2,2/3,2/3,5/6
    #[arg(long)]
    pub beta: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum FlatCmd {
    /// Symbolic expansion of the flat metric near a merging pair.
    Expand(FlatExpandArgs),
    /// Numerical cone-angle measurement at each cone point.
    Probe(FlatProbeArgs),
}

#[derive(Args, Debug)]
pub struct FlatExpandArgs {
    #[arg(long)]
    pub beta1: Option<String>,
    #[arg(long)]
    pub beta2: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FlatProbeArgs {
    /// Comma-separated angle parameters.
    #[arg(long)]
    pub beta: Option<String>,
    /// Cone points as `x:y` pairs separated by commas (default: roots of unity).
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// plane | local
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum PhgCmd {
    /// Exponents `j + 2kβ` up to the cutoff.
    Index(PhgIndexArgs),
    /// Series coefficients of the one-cone hyperbolic profile.
    U0(PhgU0Args),
    /// Coefficients `u_j` of the model recursion.
    Recurse(PhgRecurseArgs),
}

#[derive(Args, Debug)]
pub struct PhgIndexArgs {
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub cutoff: Option<String>,
}

#[derive(Args, Debug)]
pub struct PhgU0Args {
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PhgRecurseArgs {
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub steps: Option<u32>,
    #[arg(long)]
    pub truncation: Option<String>,
    /// `β₁,β₂` of a merging pair; adds its flat background and fixes β = β₁ + β₂ − 1.
    #[arg(long)]
    pub pair: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum SolveCmd {
    /// Picard iteration for the hyperbolic equation on a cone annulus.
    Hyperbolic(SolveHyperbolicArgs),
    /// Newton iteration on a spherical background.
    Spherical(SolveSphericalArgs),
    /// Curvature residual of the truncated pair approximation as ρ → 0.
    Decay(SolveDecayArgs),
}

#[derive(Args, Debug)]
pub struct MeshArgs {
    /// `NT×NP` or `NTxNP`.
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub maxit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SolveHyperbolicArgs {
    #[arg(long)]
    pub beta: Option<String>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
    /// manufactured | constant
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// CSV dump of the solution field.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveSphericalArgs {
    /// round | football | klein
    #[arg(long)]
    pub model: Option<String>,
    /// Football angle parameter.
    #[arg(long)]
    pub beta: Option<String>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Amplitude of a conformal perturbation of the background.
    #[arg(long, allow_hyphen_values = true)]
    pub perturb: Option<f64>,
    /// Skip the spectral-gap check.
    #[arg(long)]
    pub no_guard: bool,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveDecayArgs {
    #[arg(long)]
    pub beta1: Option<String>,
    #[arg(long)]
    pub beta2: Option<String>,
    /// Truncation order N of the approximation.
    #[arg(long)]
    pub order: Option<u32>,
    /// Comma-separated decreasing geometric sequence of ρ.
    #[arg(long)]
    pub rhos: Option<String>,
    /// r-truncation of each coefficient.
    #[arg(long)]
    pub cutoff: Option<String>,
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub rmin: Option<f64>,
    #[arg(long)]
    pub rmax: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Expected decay order.
    #[arg(long = "N", visible_alias = "n")]
    pub n: Option<u32>,
    /// Number of power-law terms for radial profiles.
    #[arg(long)]
    pub terms: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Faces(_) => "faces",
            Command::Charts(ChartsCmd::Verify(_)) => "charts verify",
            Command::Cones(ConesCmd::Classify(_)) => "cones classify",
            Command::Flat(FlatCmd::Expand(_)) => "flat expand",
            Command::Flat(FlatCmd::Probe(_)) => "flat probe",
            Command::Phg(PhgCmd::Index(_)) => "phg index",
            Command::Phg(PhgCmd::U0(_)) => "phg u0",
            Command::Phg(PhgCmd::Recurse(_)) => "phg recurse",
            Command::Solve(SolveCmd::Hyperbolic(_)) => "solve hyperbolic",
            Command::Solve(SolveCmd::Spherical(_)) => "solve spherical",
            Command::Solve(SolveCmd::Decay(_)) => "solve decay",
            Command::Fit(_) => "fit",
        }
    }
}

fn resolve_seed(flag: Option<u64>, cfg: &RunConfig) -> Result<u64, CliError> {
    if let Some(s) = flag.or(cfg.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Parse(format!("{SEED_ENV}=`{v}` is not a seed"))),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = resolve_seed(cli.seed, &cfg)?;
    let format = match (cli.format, &cfg.format) {
        (Some(f), _) => f,
        (None, Some(s)) => Format::parse(s)?,
        (None, None) => Format::Json,
    };
    let out = Emitter {
        format,
        seed,
        command: cli.command.name().to_string(),
        output: cli.output.clone().or_else(|| cfg.output.clone()),
    };
    commands::dispatch(&cli.command, &cfg, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("conic-moduli: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
