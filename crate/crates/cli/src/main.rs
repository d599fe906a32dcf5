use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zonoset_cli::{CliResult, Options, Outcome};

#[derive(Parser)]
#[command(name = "zonoset", version, about = "Zonotopic set computation demos and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Seed for sampling and simulation (overrides demo and config defaults).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving CSV, SVG and JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Combinatorial budget for the separating-input search.
    #[arg(long, global = true)]
    budget: Option<u128>,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce the seeded 47-generator, 15-constraint set to 4 generators and 2 constraints.
    DemoReduction,
    /// Enclose f(X) with the mean-value, first-order and relaxation methods.
    DemoPropagate,
    /// Run the five nonlinear estimators for 100 steps.
    DemoEstimation,
    /// Design a separating input for the two-model instance.
    DemoAfd,
    /// Run the experiments described by a JSON config.
    Run { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = Options { seed: cli.common.seed, out_dir: cli.common.out_dir, budget: cli.common.budget };
    let result: CliResult<Outcome> = match &cli.command {
        Command::DemoReduction => zonoset_cli::demo_reduction(&o),
        Command::DemoPropagate => zonoset_cli::demo_propagate(&o),
        Command::DemoEstimation => zonoset_cli::demo_estimation(&o),
        Command::DemoAfd => zonoset_cli::demo_afd(&o),
        Command::Run { config } => zonoset_cli::run(&o, config),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
