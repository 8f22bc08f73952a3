//! Command-line front end for the modular Burgers shock toolbox.
//!
//! Every subcommand reads its parameters from three layers, later layers
//! winning: built-in defaults, a flat `key = value` config file (`--config`),
//! and command-line flags. Runs write CSV artifacts plus a `manifest.txt`
//! echoing the effective configuration into the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 check failure.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::FileConfig;

#[derive(Parser)]
#[command(name = "modular-burgers", version, about = "Viscous shock profiles, interface dynamics and checks for the modular Burgers equation")]
struct Cli {
    /// Flat `key = value` configuration file; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for CSV/SVG artifacts and the run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for randomized checks.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a viscous shock profile and verify its interface conditions.
    Shock {
        /// Limit of the profile as x → +∞ (must be positive).
        #[arg(long)]
        w_plus: Option<f64>,
        /// Limit of the profile as x → −∞ (must be negative).
        #[arg(long)]
        w_minus: Option<f64>,
        /// Length of the sampled window, centered on the interface.
        #[arg(long)]
        length: Option<f64>,
        /// Sampling step.
        #[arg(long)]
        h: Option<f64>,
        /// Also write an SVG plot of the profile.
        #[arg(long)]
        svg: bool,
    },
    /// Run the interface-tracking finite-difference scheme.
    Simulate {
        /// Initial-condition preset: IC1, IC2 or odd.
        #[arg(long)]
        ic: Option<String>,
        /// CSV file with columns y,v_plus,v_minus giving the initial
        /// perturbation on the interior grid y = h, 2h, ….
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
        /// Final time.
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Half-line truncation length.
        #[arg(long)]
        length: Option<f64>,
        /// Spatial step.
        #[arg(long)]
        h: Option<f64>,
        /// Time step.
        #[arg(long)]
        tau: Option<f64>,
        /// Record a full snapshot every this many steps.
        #[arg(long)]
        stride: Option<usize>,
        /// Use the predictor–corrector interface update.
        #[arg(long)]
        predictor_corrector: bool,
        /// Also write SVG plots of the profiles and interface series.
        #[arg(long)]
        svg: bool,
    },
    /// Evaluate the exact odd-sector solution on a grid.
    ExactOdd {
        /// Comma-separated evaluation times (all must be positive).
        #[arg(long)]
        times: Option<String>,
        /// Length of the sampled window on each side of the interface.
        #[arg(long)]
        length: Option<f64>,
        /// Sampling step.
        #[arg(long)]
        h: Option<f64>,
        /// Also write an SVG plot of the sampled profiles.
        #[arg(long)]
        svg: bool,
    },
    /// Solve the coupled half-line fixed-point system and report residuals.
    Picard {
        /// Initial-condition preset: IC1 or IC2.
        #[arg(long)]
        ic: Option<String>,
        /// Final time.
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Number of time levels.
        #[arg(long)]
        levels: Option<usize>,
        /// Spatial grid step.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Spatial span of the stored iterates.
        #[arg(long)]
        y_span: Option<f64>,
        /// Sup-norm tolerance for the fixed-point iteration.
        #[arg(long)]
        tol: Option<f64>,
        /// Iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Resolve each time level with a nested inner iteration.
        #[arg(long)]
        nested: bool,
        /// Also write an SVG plot of the interface signal.
        #[arg(long)]
        svg: bool,
    },
    /// Verify the Abel-type inversions against their defining equations.
    AbelCheck {
        /// Comma-separated residual evaluation times.
        #[arg(long)]
        t_values: Option<String>,
        /// Number of random perturbation bumps per equation kind.
        #[arg(long)]
        bumps: Option<usize>,
    },
    /// Grid-refinement study with observed convergence orders.
    Convergence {
        /// Which comparison to run: odd (against the exact solution) or
        /// general (self-comparison of the interface position).
        #[arg(long)]
        case: Option<String>,
        /// Number of refinement levels.
        #[arg(long)]
        levels: Option<usize>,
        /// Half-line truncation length.
        #[arg(long)]
        length: Option<f64>,
        /// Interior nodes on the coarsest level.
        #[arg(long)]
        n0: Option<usize>,
        /// Time step on the coarsest level.
        #[arg(long)]
        tau: Option<f64>,
        /// Final time.
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Refine the time step quadratically with the spatial step.
        #[arg(long)]
        tau_quadratic: bool,
    },
    /// Re-run both benchmark simulations and emit their figure artifacts.
    ReproduceFigures,
}

/// Failure carrying the process exit code demanded by its class.
pub enum Failure {
    /// Bad flags, config file, presets or rejected input data.
    Config(String),
    /// The solver itself failed or aborted, or an artifact could not be written.
    Run(String),
    /// Everything ran, but a verification check did not pass.
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Run(_) => 3,
            Failure::Check(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Run(m) | Failure::Check(m) => m,
        }
    }
}

/// Keys every subcommand accepts from a config file.
const GLOBAL_KEYS: [&str; 2] = ["out", "seed"];

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Config)?,
        None => FileConfig::empty(),
    };
    let ctx = commands::Ctx::new(&file, cli.out, cli.seed)?;
    match cli.command {
        Command::Shock { w_plus, w_minus, length, h, svg } => {
            commands::run_shock(&ctx, w_plus, w_minus, length, h, svg)
        }
        Command::Simulate {
            ic,
            data,
            t_final,
            length,
            h,
            tau,
            stride,
            predictor_corrector,
            svg,
        } => commands::run_simulate(
            &ctx,
            ic,
            data,
            t_final,
            length,
            h,
            tau,
            stride,
            predictor_corrector,
            svg,
        ),
        Command::ExactOdd { times, length, h, svg } => {
            commands::run_exact_odd(&ctx, times, length, h, svg)
        }
        Command::Picard { ic, t_final, levels, grid_step, y_span, tol, max_iter, nested, svg } => {
            commands::run_picard(
                &ctx, ic, t_final, levels, grid_step, y_span, tol, max_iter, nested, svg,
            )
        }
        Command::AbelCheck { t_values, bumps } => commands::run_abel_check(&ctx, t_values, bumps),
        Command::Convergence { case, levels, length, n0, tau, t_final, tau_quadratic } => {
            commands::run_convergence(&ctx, case, levels, length, n0, tau, t_final, tau_quadratic)
        }
        Command::ReproduceFigures => commands::run_reproduce_figures(&ctx),
    }
}
