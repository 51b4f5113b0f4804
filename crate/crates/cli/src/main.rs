use std::io::{stderr, stdout};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use decor_uniform::io::NormalizeMode;
use decor_uniform_cli::{cmd_check, cmd_curvature, cmd_uniformize, cmd_verify, UniformizeOptions};

/// Discrete uniformization of decorated piecewise-Euclidean surfaces.
#[derive(Parser)]
#[command(name = "decor-uniform", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Normalize {
    SumZero,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem file: triangle inequalities, separation, Delaunay margins, Gauss-Bonnet.
    Check { problem: String },
    /// Print angle defects and alpha-curvatures of the input metric.
    Curvature {
        problem: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Solve for the conformal factor with the prescribed or constant curvature.
    Uniformize {
        problem: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        /// JSON array with one target curvature per vertex.
        #[arg(long, conflicts_with = "constant")]
        target: Option<String>,
        #[arg(long)]
        constant: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Seed of the random restarts.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        normalize: Option<Normalize>,
        /// Attempt targets outside the supported cases.
        #[arg(long)]
        force: bool,
        /// Print (iteration, residual, flips) and the flip log to stderr.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Recheck a result file.
    Verify { result: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (mut out, mut err) = (stdout(), stderr());
    let code = match cli.command {
        Command::Check { problem } => cmd_check(&problem, &mut out, &mut err),
        Command::Curvature { problem, alpha } => cmd_curvature(&problem, alpha, &mut out, &mut err),
        Command::Uniformize {
            problem,
            alpha,
            target,
            constant,
            tol,
            max_iters,
            seed,
            normalize,
            force,
            trace,
            out: out_path,
        } => {
            let opts = UniformizeOptions {
                alpha,
                target,
                constant,
                tol,
                max_iters,
                seed,
                normalize: normalize.map(|n| match n {
                    Normalize::SumZero => NormalizeMode::SumZero,
                    Normalize::None => NormalizeMode::None,
                }),
                force,
                trace,
                out: out_path,
            };
            cmd_uniformize(&problem, &opts, &mut out, &mut err)
        }
        Command::Verify { result } => cmd_verify(&result, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
