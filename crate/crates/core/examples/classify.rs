//! Builds a small FCM by hand and follows its dynamics to a class.
//!
//! `cargo run --example classify`

use blind_fcm::fcm::{classify, run_dynamics};
use blind_fcm::{Activation, DynamicsConfig, FcmModel, ModelShape, SquareMatrix};

fn main() -> blind_fcm::Result<()> {
    // nodes: x0, x1 (inputs), "benign", "malignant" (outputs)
    let weights = SquareMatrix::from_rows(&[
        vec![0.0, 0.0, -0.6, 0.9],
        vec![0.0, 0.0, 0.4, -0.2],
        vec![0.0, 0.0, 0.0, -0.5],
        vec![0.0, 0.0, -0.3, 0.0],
    ])?;
    let shape = ModelShape::new(2, 2, Activation::UnipolarSigmoid, 5.0);
    let model = FcmModel::new(shape, weights)?.with_node_names(
        ["x0", "x1", "benign", "malignant"]
            .map(String::from)
            .to_vec(),
    )?;

    for features in [[0.9, 0.1], [0.1, 0.8], [0.5, 0.5]] {
        let outcome = run_dynamics(
            &model,
            &model.initial_state(&features)?,
            &DynamicsConfig::default(),
        )?;
        let class = classify(&model, &features)?;
        println!(
            "{features:?}: {:?} after {} steps -> {}",
            outcome.status,
            outcome.iterations_used,
            model.node_names().unwrap()[model.n_input() + class]
        );
        println!("  final state {:.4?}", outcome.final_state.0);
    }

    println!("\n{}", model.to_json()?);
    Ok(())
}
