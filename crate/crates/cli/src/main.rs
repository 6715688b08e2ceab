mod artifacts;
mod commands;
mod error;
mod jsonio;
mod svg;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use singred_core::TolerancePolicy;

use crate::artifacts::Artifacts;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "singred",
    version,
    about = "Singular-reduction batch toolkit: JSON problem specs in, JSON/CSV/SVG artifacts out",
    after_help = "Every input spec is a JSON object carrying \"schema\": 1. Run a subcommand with --help for its fields; omitting --input runs the built-in default problem."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON problem spec; the subcommand's built-in default is used when omitted
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory receiving all artifacts (created if missing)
    #[arg(long, default_value = "singred-out")]
    pub out: PathBuf,
    /// Seed for every sampled verification in the run
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override of the residual tolerance (rank tolerance stays 1e-10)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also emit SVG plots where the subcommand supports them
    #[arg(long)]
    pub plot: bool,
}

impl CommonArgs {
    pub fn tol_policy(&self) -> TolerancePolicy {
        let mut t = TolerancePolicy::default();
        if let Some(r) = self.tol {
            t.residual_tol = r;
        }
        t
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Rank factorization, generalized inverse, and block extension of one matrix
    #[command(after_help = "Input schema: {\"schema\": 1, \"matrix\": {\"rows\": R, \"cols\": C, \"data\": [row-major]}, \"rank_tol\": float?, \"residual_tol\": float?}. Default: a seeded 5x4 matrix of rank 2. Writes ginv.json.")]
    Ginv(CommonArgs),
    /// Neumann boundary-value discretization and its quadrature Green operator
    #[command(after_help = "Input schema: {\"schema\": 1, \"sizes\": [int, ...]} with every size >= 8. Default sizes: [64, 128, 256]. Writes bvp.json, and bvp.svg with --plot.")]
    Bvp(CommonArgs),
    /// Uniform-regularity scan of the scaled derivative family on polynomials
    #[command(after_help = "Input schema: {\"schema\": 1, \"degree\": int (<= 12, default 10), \"max_denominator\": int (default 10)}. Scans parameters 1/n for n = 1..=max_denominator. Writes family.json.")]
    Family(CommonArgs),
    /// Normal-form chart of a built-in map: straightening, singular part, classification
    #[command(after_help = "Input schema: {\"schema\": 1, \"example\": \"circle\" | \"quadratic\" | \"angular_momentum\", \"n_validation_samples\": int (default 200)}. Writes nf.json.")]
    Nf(CommonArgs),
    /// Equivariant chart of the planar angular momentum and its level-set model
    #[command(after_help = "Input schema: {\"schema\": 1}. Writes kuranishi.json.")]
    Kuranishi(CommonArgs),
    /// Momentum maps of the shipped linear symplectic systems with their identities
    #[command(after_help = "Input schema: {\"schema\": 1, \"system\": \"oscillator\" | \"su2\", \"n_samples\": int (default 200)}. Writes momentum.json.")]
    Momentum(CommonArgs),
    /// Slice decomposition and quadratic singular momentum at chosen points
    #[command(after_help = "Input schema: {\"schema\": 1, \"system\": \"oscillator\" | \"su2\", \"points\": [[float; dim], ...]?, \"n_scalings\": int (default 100)}. Writes mgs.json.")]
    Mgs(CommonArgs),
    /// Orbit-type strata of the zero momentum level with reduced forms
    #[command(after_help = "Input schema: {\"schema\": 1, \"system\": \"oscillator\" | \"su2\", \"n_samples\": int (default 64)}. Writes strata.json, and strata.svg with --plot.")]
    Strata(CommonArgs),
    /// Harmonic-oscillator case study: trajectory, cone flow, seams
    #[command(after_help = "Input schema: {\"schema\": 1, \"initial\": [q1, q2, p1, p2] (default [1, 0, 0.3, 0], a zero-momentum state), \"dt\": float (default 1e-3), \"steps\": int (default 20000), \"csv_stride\": int (default 20)}. Writes trajectory.csv, cone.svg, seams.json.")]
    Oscillator(CommonArgs),
    /// Electroweak singular-stratum identities: density, Gauss constraint, masses
    #[command(after_help = "Input schema: {\"schema\": 1, \"g\": float (default 0.65), \"gp\": float (default 0.35), \"lambda\": float (default 0.4), \"vev\": float (default 1.0), \"n_samples\": int (default 1000)}. Writes ew.json.")]
    Ew(CommonArgs),
    /// Centralizer and Goursat generator tables with sampled verification
    #[command(after_help = "Input schema: {\"schema\": 1, \"param_bound\": int >= 1 (default 2), \"n_samples\": int (default 200)}. Writes table51.txt, table52.txt, howe.json.")]
    Howe(CommonArgs),
    /// Surface-group representation varieties: relator ranks and orbit types
    #[command(after_help = "Input schema: {\"schema\": 1, \"cases\": [\"u1_generic\" | \"su2_torus\" | \"su2_central\", ...]}. Default: all three. Writes repvar.json.")]
    Repvar(CommonArgs),
}

fn dispatch(cmd: &Cmd) -> Result<(&CommonArgs, Artifacts), CliError> {
    Ok(match cmd {
        Cmd::Ginv(a) => (a, commands::linear::ginv(a)?),
        Cmd::Bvp(a) => (a, commands::linear::bvp(a)?),
        Cmd::Family(a) => (a, commands::linear::family(a)?),
        Cmd::Nf(a) => (a, commands::charts::nf(a)?),
        Cmd::Kuranishi(a) => (a, commands::charts::kuranishi(a)?),
        Cmd::Momentum(a) => (a, commands::mechanics::momentum(a)?),
        Cmd::Mgs(a) => (a, commands::mechanics::mgs(a)?),
        Cmd::Strata(a) => (a, commands::mechanics::strata(a)?),
        Cmd::Oscillator(a) => (a, commands::oscillator::run(a)?),
        Cmd::Ew(a) => (a, commands::gauge::ew(a)?),
        Cmd::Howe(a) => (a, commands::gauge::howe(a)?),
        Cmd::Repvar(a) => (a, commands::gauge::repvar(a)?),
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (args, artifacts) = dispatch(&cli.cmd)?;
    artifacts.write_all(&args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Numerical code must never take the process down: trap panics and turn
    // them into the numerical-failure exit path.
    std::panic::set_hook(Box::new(|_| {}));
    let outcome = catch_unwind(AssertUnwindSafe(|| run(&cli)));
    let _ = std::panic::take_hook();
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            let e = CliError::numerical(format!("internal panic: {msg}"));
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
