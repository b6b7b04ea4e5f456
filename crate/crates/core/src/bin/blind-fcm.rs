use std::path::PathBuf;
use std::process::ExitCode;

use blind_fcm::aggregation::WeightScheme;
use blind_fcm::experiment::{self, parse_list, ExperimentConfig, Overrides};
use blind_fcm::federation::FederationMode;
use blind_fcm::Activation;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    version,
    about = "Blind federated learning of fuzzy cognitive map classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_parser = ["blind", "blended"])]
        mode: Option<String>,
        #[arg(long, value_parser = ["constant", "accuracy", "precision"])]
        scheme: Option<String>,
        #[arg(long, value_parser = ["sigmoid", "tanh"])]
        activation: Option<String>,
        #[arg(long)]
        slope: Option<f64>,
        #[arg(long)]
        rounds: Option<usize>,
        /// Comma-separated data shares, e.g. 0.2,0.2,0.2,0.2,0.2
        #[arg(long)]
        agents: Option<String>,
        /// One seed or a comma-separated list
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> blind_fcm::Result<bool> {
    let Command::Run {
        config,
        dataset,
        mode,
        scheme,
        activation,
        slope,
        rounds,
        agents,
        seed,
        out,
    } = cli.command;

    let mut cfg = ExperimentConfig::load(&config)?;
    cfg.apply(&Overrides {
        dataset,
        mode: mode.map(|m| m.parse::<FederationMode>()).transpose()?,
        scheme: scheme.map(|s| s.parse::<WeightScheme>()).transpose()?,
        activation: activation.map(|a| a.parse::<Activation>()).transpose()?,
        slope,
        rounds,
        agents: agents.as_deref().map(parse_list).transpose()?,
        seeds: seed.as_deref().map(parse_list).transpose()?,
        output_dir: out,
    });

    let outcome = experiment::run(&cfg)?;
    for result in &outcome.results {
        println!("seed {}", result.seed);
        print!("{}", result.table.to_text());
        println!();
    }
    for (_, table) in &outcome.medians {
        println!("median over seeds");
        print!("{}", table.to_text());
        println!();
    }
    let failed = outcome
        .manifest
        .entries
        .iter()
        .filter(|e| e.error.is_some())
        .count();
    if failed > 0 {
        eprintln!(
            "{failed} combination(s) failed; see {}",
            cfg.output_dir.join("manifest.json").display()
        );
    }
    Ok(outcome.manifest.all_succeeded())
}
