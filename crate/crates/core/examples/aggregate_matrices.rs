//! Combines participant matrices under each weighting scheme, and shows the
//! augmentation of maps with different concepts.
//!
//! `cargo run --example aggregate_matrices`

use blind_fcm::aggregation::{
    aggregate_detailed, direct_sum, merge_common_nodes, ContributionBundle, WeightScheme,
};
use blind_fcm::SquareMatrix;

fn bundle(id: &str, rows: Vec<Vec<f64>>, accuracy: f64, precision: f64) -> ContributionBundle {
    ContributionBundle {
        participant_id: id.into(),
        matrix: SquareMatrix::from_rows(&rows).unwrap(),
        accuracy,
        precision,
        dataset_size: 100,
    }
}

fn main() -> blind_fcm::Result<()> {
    let bundles = [
        bundle(
            "1",
            vec![
                vec![0.0, 0.8, -0.2],
                vec![0.1, 0.0, 0.5],
                vec![-0.4, 0.3, 0.0],
            ],
            0.95,
            0.90,
        ),
        bundle(
            "2",
            vec![
                vec![0.0, 0.2, 0.6],
                vec![-0.3, 0.0, 0.1],
                vec![0.2, -0.9, 0.0],
            ],
            0.70,
            0.40,
        ),
        bundle(
            "3",
            vec![
                vec![0.0, -0.5, 0.0],
                vec![0.7, 0.0, -0.6],
                vec![0.5, 0.1, 0.0],
            ],
            0.85,
            0.00,
        ),
    ];
    for scheme in [
        WeightScheme::Constant,
        WeightScheme::AccuracyBased,
        WeightScheme::PrecisionBased,
    ] {
        let (matrix, weights) = aggregate_detailed(&bundles, scheme)?;
        println!("{scheme}: weights {:.3?}", weights.weights);
        for row in matrix.rows() {
            println!("  {row:+.3?}");
        }
    }

    let a = SquareMatrix::from_rows(&[vec![0.0, 0.5], vec![-0.5, 0.0]])?;
    let b = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.25, 0.0]])?;
    println!("\ndirect sum:");
    for row in direct_sum(&a, &b).rows() {
        println!("  {row:+.2?}");
    }

    let names = |n: &[&str]| n.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let (merged, nodes) = merge_common_nodes(&[
        (a, names(&["smoking", "cancer"])),
        (b, names(&["cancer", "fatigue"])),
    ])?;
    println!("\nmerged over {nodes:?}:");
    for row in merged.rows() {
        println!("  {row:+.2?}");
    }
    Ok(())
}
