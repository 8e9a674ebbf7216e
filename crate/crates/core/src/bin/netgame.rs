use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use netgame::cli::{self, RunConfig, RunOptions};
use netgame::Result;

#[derive(Parser)]
#[command(name = "netgame", version, about = "Equilibrium certificates, dynamics and sensitivity for network games")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for sampled curvature bounds and monotonicity probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Residual tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectral measures, margins, verdicts and guarantees.
    Analyze,
    /// Equilibria from the starting profiles.
    Solve,
    /// Best-response or projection trajectories.
    Dynamics,
    /// Equilibrium sets along a parameter path.
    Sweep,
    /// Equilibrium Jacobian with respect to parameters.
    Sensitivity,
}

fn run(args: &Args) -> Result<String> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| netgame::Error::Config("--config is required".into()))?;
    let cfg = RunConfig::load(path)?;
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(netgame::Error::Config(format!("--tol must be positive, got {t}")));
        }
    }
    let opts = RunOptions {
        out: args.out.clone(),
        seed: args.seed,
        tol: args.tol,
    };
    Ok(match args.command {
        Command::Analyze => {
            let r = cli::run_analyze(&cfg, &opts)?;
            let mut s = format!(
                "alpha_2 {:.6e}  alpha_inf {:.6e}  alpha_min {}",
                r.margins.alpha_2,
                r.margins.alpha_inf,
                r.margins.alpha_min.map_or("-".into(), |v| format!("{v:.6e}"))
            );
            for g in &r.guarantees {
                s += &format!("\n{:?} via {:?}", g.kind, g.criterion);
            }
            for w in &r.warnings {
                s += &format!("\nwarning: {w}");
            }
            s
        }
        Command::Solve => {
            let r = cli::run_solve(&cfg, &opts)?;
            format!("{} equilibria, {} failed starts", r.equilibria.len(), r.failed_starts.len())
        }
        Command::Dynamics => cli::run_dynamics(&cfg, &opts)?
            .iter()
            .map(|d| format!("{}: {:?} after {} iterations, residual {:.3e}", d.csv, d.terminal, d.iterations, d.final_residual))
            .collect::<Vec<_>>()
            .join("\n"),
        Command::Sweep => {
            let r = cli::run_sweep(&cfg, &opts)?;
            format!("{} sweep points, {} equilibria", r.points.len(), r.rows.len())
        }
        Command::Sensitivity => {
            let r = cli::run_sensitivity(&cfg, &opts)?;
            format!("finite-difference error {:.3e}", r.fd_error)
        }
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("netgame: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
