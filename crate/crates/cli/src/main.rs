use clap::{Parser, Subcommand, ValueEnum};
use fragrd::{execute, Invocation, Task};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fragrd", version, about = "Fragmentation indices and bistable reaction-diffusion threshold experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dotted-path override, e.g. `solver.h=0.01`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for random corpora.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// δ1 / δH report for the configured set, or for a seeded corpus.
    Indices,
    /// Build a family member and report its measure and indices.
    Family,
    /// Run the solver and write snapshots.
    Simulate,
    /// Classify the configured initial datum.
    Classify,
    /// Bisect the threshold of a monotone family.
    Threshold,
    /// Run a reproduction recipe.
    Reproduce { recipe: Recipe },
}

#[derive(Clone, Copy, ValueEnum)]
enum Recipe {
    Fig1,
    #[value(name = "thm1-homog")]
    Thm1Homog,
    #[value(name = "thm1-cubeball")]
    Thm1Cubeball,
    #[value(name = "nonmono-dh")]
    NonmonoDh,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let task = match cli.command {
        Command::Indices => Task::Indices,
        Command::Family => Task::Family,
        Command::Simulate => Task::Simulate,
        Command::Classify => Task::Classify,
        Command::Threshold => Task::Threshold,
        Command::Reproduce { recipe } => Task::Reproduce(
            match recipe {
                Recipe::Fig1 => "fig1",
                Recipe::Thm1Homog => "thm1-homog",
                Recipe::Thm1Cubeball => "thm1-cubeball",
                Recipe::NonmonoDh => "nonmono-dh",
            }
            .to_owned(),
        ),
    };
    let inv = Invocation { config: cli.config, out: cli.out, overrides: cli.overrides, workers: cli.workers, seed: cli.seed };
    match execute(&task, &inv) {
        Ok(m) => {
            println!("{}", serde_json::to_string(&m.summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fragrd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
