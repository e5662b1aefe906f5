use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hysched_cli::config::ExperimentKind;
use hysched_cli::{load_config, run_experiment, write_run, CliError, Overrides};

#[derive(Parser)]
#[command(name = "hysched", version, about = "Mode-scheduling experiments for hybrid systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scheduling problem.
    Solve(RunArgs),
    /// Compare the scheduler against the baselines under a shared rollout budget.
    Compare(RunArgs),
    /// Closed-loop cost as a function of the planning horizon.
    SweepHorizon(RunArgs),
    /// One receding-horizon episode.
    Mpc(RunArgs),
    /// Parse and check a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Rollout budget: per solve, per method run, or per closed-loop step.
    #[arg(long)]
    budget: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (kind, args) = match cli.command {
        Command::ValidateConfig { config } => {
            let loaded = load_config(&config, &Overrides::default())?;
            println!(
                "ok: {} experiment, config hash {}",
                loaded.config.experiment.as_str(),
                loaded.run_id()
            );
            return Ok(());
        }
        Command::Solve(a) => (ExperimentKind::Solve, a),
        Command::Compare(a) => (ExperimentKind::Compare, a),
        Command::SweepHorizon(a) => (ExperimentKind::SweepHorizon, a),
        Command::Mpc(a) => (ExperimentKind::Mpc, a),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::config(None, "--threads", "thread count must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
    }
    let overrides = Overrides {
        seed: args.seed,
        budget: args.budget,
        output_dir: args.out,
    };
    let loaded = load_config(&args.config, &overrides)?;
    if loaded.config.experiment != kind {
        return Err(CliError::config(
            None,
            "experiment",
            format!(
                "config describes a `{}` experiment, not `{}`",
                loaded.config.experiment.as_str(),
                kind.as_str()
            ),
        ));
    }
    let output = run_experiment(&loaded)?;
    let dir = write_run(&loaded, &output)?;
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
