use clap::{Parser, Subcommand};
use optosync::config::{RunConfig, Scenario};
use optosync::parallel::default_workers;
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit status for configuration problems.
const EXIT_CONFIG: u8 = 2;
/// Exit status for I/O problems.
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "optosync", version, about = "Synchronization analysis of two coupled optomechanical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write SVG figures.
    #[arg(long)]
    render: bool,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in the configuration.
    Run(Common),
    /// Time evolution of the configured switch settings.
    Simulate(Common),
    /// Lyapunov-exponent field over the (mu, lambda) grid.
    SweepLyapunov(Common),
    /// Time-averaged S_p' field over the (mu, lambda) grid.
    SweepSpbar(Common),
    /// Switch truth table and logic-region search.
    Logic(Common),
    /// Attractor classification over drive amplitudes.
    CalibrateDrive(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Run(a) => (None, a),
        Command::Simulate(a) => (Some(Scenario::Simulate), a),
        Command::SweepLyapunov(a) => (Some(Scenario::SweepLyapunov), a),
        Command::SweepSpbar(a) => (Some(Scenario::SweepSpbar), a),
        Command::Logic(a) => (Some(Scenario::Logic), a),
        Command::CalibrateDrive(a) => (Some(Scenario::CalibrateDrive), a),
    };
    let mut cfg = match RunConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let scenario = match cfg.resolve_scenario(scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if args.render {
        cfg.render = true;
    }
    if let Some(w) = args.workers {
        if w == 0 {
            eprintln!("--workers must be >= 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        cfg.workers = Some(w);
    }
    let workers = cfg.workers.unwrap_or_else(default_workers);
    let dir = args.output.unwrap_or_else(|| cfg.output_dir.clone());
    match optosync::run(&cfg, scenario, &dir, workers) {
        Ok(outcome) => {
            for f in &outcome.manifest.failures {
                eprintln!("failed: {}: {}", f.item, f.reason);
            }
            println!(
                "{}: {} artifact(s) in {} ({})",
                scenario.name(),
                outcome.manifest.artifacts.len(),
                dir.display(),
                outcome.manifest.status
            );
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}
