//! Splits the breast cancer data across participants the way the federated
//! experiments do, and prints each share's size and class balance.
//!
//! `cargo run --example partition_dataset`

use std::path::PathBuf;

use blind_fcm::data::{self, CsvOptions, NormalizationStats};
use blind_fcm::experiment::prepare_participants;

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

    let proportions = [0.05, 0.04, 0.42, 0.20, 0.29];
    println!(
        "row counts: {:?}",
        data::partition_counts(raw.len(), &proportions)
    );
    for p in prepare_participants(&raw, &schema, &proportions, 0.2, 1)? {
        println!(
            "agent {}: {:>3} train / {:>2} test rows, {:>5.1}% positive",
            p.id(),
            p.train().len(),
            p.test().len(),
            100.0 * p.positive_rate()
        );
    }
    Ok(())
}
