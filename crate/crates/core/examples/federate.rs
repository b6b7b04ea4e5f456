//! Five participants learn a shared breast cancer classifier without any
//! participant revealing its data, printing progress after every round.
//!
//! `cargo run --release --example federate`

use std::path::PathBuf;

use blind_fcm::aggregation::WeightScheme;
use blind_fcm::data::{self, CsvOptions, NormalizationStats};
use blind_fcm::experiment::prepare_participants;
use blind_fcm::federation::{
    run_federation_observed, FederationConfig, FederationEvent, FederationMode,
};
use blind_fcm::{Activation, ModelShape};

fn main() -> blind_fcm::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.csv");
    let options = CsvOptions {
        label_column: "diagnosis".into(),
        positive_label: "M".into(),
        drop_columns: vec!["id".into()],
        ..CsvOptions::default()
    };
    let raw = data::load_csv(path, &options)?;
    let schema = NormalizationStats::fit(&raw)?;
    let participants = prepare_participants(&raw, &schema, &[0.2; 5], 0.2, 1)?;

    let shape = ModelShape::new(schema.n_features(), 2, Activation::HyperbolicTangent, 2.0);
    let config = FederationConfig {
        rounds: 10,
        master_seed: 1,
        ..FederationConfig::new(
            shape,
            FederationMode::BlendedBlind,
            WeightScheme::AccuracyBased,
        )
    };
    let outcome = run_federation_observed(participants, &config, |event| match event {
        FederationEvent::Started { participants } => {
            println!("{} participants, no initial model", participants.len())
        }
        FederationEvent::LocalTrainingDone { .. } => println!("round 0: local models trained"),
        FederationEvent::RoundCompleted { report, .. } => {
            let acc: Vec<f64> = report.post_metrics.iter().map(|m| m.accuracy).collect();
            println!(
                "round {:>2}: federated loss {:.4}, test accuracy {:.3?}",
                report.round, report.federated_loss, acc
            );
        }
    })?;

    let s = &outcome.summary;
    println!(
        "average accuracy {:.4} -> {:.4}, precision {:.4} -> {:.4}",
        s.average_pre.accuracy,
        s.average_post.accuracy,
        s.average_pre.precision,
        s.average_post.precision
    );
    Ok(())
}
