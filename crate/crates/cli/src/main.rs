//! `kickbec` command-line front end.

mod commands;
mod config;
mod recipes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CommandError, Status};
use config::RunConfig;
use kickbec::scan::Engine;

#[derive(Parser)]
#[command(name = "kickbec", version, about = "Kicked Bose-Einstein condensates on a ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Engine; overrides the config's `engine` key.
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Time series of one kicked evolution (`timeseries.csv`).
    Simulate,
    /// Parameter sweep (`sweep.csv`, `windows.csv`).
    Scan,
    /// Predicted resonance positions (`resonances.csv`).
    Predict,
    /// Bundled figure-reproduction configs.
    Recipes {
        #[command(subcommand)]
        action: RecipeAction,
    },
}

#[derive(Subcommand)]
enum RecipeAction {
    List,
    Run { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Full,
    Map,
    Closed,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Full => Engine::FullBogoliubov,
            EngineArg::Map => Engine::PerturbativeMap,
            EngineArg::Closed => Engine::ClosedForm,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let path = cli.config.as_ref().ok_or("--config <path> is required")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: &Cli, command: &str, config: &RunConfig) -> Result<Status, CommandError> {
    let engine = cli
        .engine
        .map(Engine::from)
        .or(config.engine)
        .unwrap_or(Engine::FullBogoliubov);
    kickbec::with_workers(cli.workers, || match command {
        "simulate" => commands::simulate(config, engine, &cli.out),
        "scan" => commands::scan(config, engine, &cli.out),
        "predict" => commands::predict(config, &cli.out),
        other => Err(CommandError::Config(format!("unknown command '{other}'"))),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if cli.workers == Some(0) {
        eprintln!("error: --workers must be >= 1");
        return ExitCode::from(1);
    }
    let (command, config) = match &cli.command {
        Command::Recipes { action: RecipeAction::List } => {
            for r in recipes::RECIPES {
                println!("{:<28} {:<9} {}", r.name, r.command(), r.description());
            }
            return ExitCode::SUCCESS;
        }
        Command::Recipes { action: RecipeAction::Run { name } } => {
            let Some(recipe) = recipes::find(name) else {
                eprintln!("error: no recipe named '{name}' (see `kickbec recipes list`)");
                return ExitCode::from(1);
            };
            match config::parse(recipe.text) {
                Ok(c) => (recipe.command(), c),
                Err(e) => {
                    eprintln!("error: recipe {name}: {e}");
                    return ExitCode::from(1);
                }
            }
        }
        other => {
            let command = match other {
                Command::Simulate => "simulate",
                Command::Scan => "scan",
                _ => "predict",
            };
            match load(&cli) {
                Ok(c) => (command, c),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
        }
    };
    match run(&cli, command, &config) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Cutoff) => {
            eprintln!("stopped early: N_ex exceeded the cutoff");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
