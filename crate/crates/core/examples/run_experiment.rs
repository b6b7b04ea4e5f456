//! Runs the single-agent baseline config for one seed and prints its table.
//!
//! `cargo run --release --example run_experiment`

use std::path::PathBuf;

use blind_fcm::experiment::{self, ExperimentConfig};

fn main() -> blind_fcm::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut config = ExperimentConfig::load(root.join("configs/breast_cancer_baseline.json"))?;
    config.dataset.path = root.join("data/wdbc.csv");
    config.seeds = vec![1];
    config.output_dir = std::env::temp_dir().join("blind-fcm-example");

    let outcome = experiment::run(&config)?;
    for result in &outcome.results {
        println!("{}", result.table.to_text());
    }
    println!("artifacts under {}", config.output_dir.display());
    Ok(())
}
