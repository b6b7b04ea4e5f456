//! Trains a single FCM classifier on the breast cancer data with PSO.
//!
//! `cargo run --release --example train_classifier`

use std::path::PathBuf;

use blind_fcm::data::{self, CsvOptions};
use blind_fcm::federation::evaluate_participant;
use blind_fcm::pso::{train, TrainingSet};
use blind_fcm::{Activation, DynamicsConfig, ModelShape, PsoConfig};

fn main() -> blind_fcm::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.csv");
    let options = CsvOptions {
        label_column: "diagnosis".into(),
        positive_label: "M".into(),
        drop_columns: vec!["id".into()],
        ..CsvOptions::default()
    };
    let raw = data::load_csv(path, &options)?;
    let (dataset, _stats) = data::encode_and_normalize(&raw)?;
    let (train_set, test_set) = data::train_test_split(&dataset, 0.2, 1)?;
    println!(
        "{} rows, {} features, {:.1}% malignant",
        dataset.len(),
        dataset.n_features(),
        100.0 * dataset.positive_rate()
    );

    let shape = ModelShape::new(dataset.n_features(), 2, Activation::HyperbolicTangent, 2.0);
    let dynamics = DynamicsConfig::default();
    let trained = train(
        TrainingSet::new(&train_set.features, &train_set.labels)?,
        shape,
        &PsoConfig::default().with_seed(1),
        &dynamics,
        None,
    )?;
    for record in trained.log.records.iter().step_by(5) {
        println!(
            "iteration {:>2}: fitness {:.4}",
            record.iteration, record.global_best_fitness
        );
    }
    let scores = evaluate_participant(&trained.model, &test_set, &dynamics)?;
    println!(
        "test accuracy {:.4}, precision {:.4}",
        scores.accuracy, scores.precision
    );
    Ok(())
}
