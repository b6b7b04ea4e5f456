use blind_fcm::aggregation::{aggregate, ContributionBundle, WeightScheme};
use blind_fcm::data::{self, CsvOptions, NormalizationStats};
use blind_fcm::experiment::ExperimentConfig;
use blind_fcm::fcm::{argmax, run_dynamics, step, DynamicsStatus};
use blind_fcm::{Activation, DynamicsConfig, FcmModel, ModelShape, SquareMatrix, StateVector};
use proptest::prelude::*;

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![
        Just(Activation::UnipolarSigmoid),
        Just(Activation::HyperbolicTangent)
    ]
}

/// A random model with `n_input` inputs and two outputs.
fn model() -> impl Strategy<Value = FcmModel> {
    (1usize..4, activation(), 0.2f64..6.0).prop_flat_map(|(n_input, kind, slope)| {
        let n = n_input + 2;
        prop::collection::vec(-1.0f64..=1.0, n * n - n).prop_map(move |off| {
            let shape = ModelShape::new(n_input, 2, kind, slope);
            FcmModel::new(shape, SquareMatrix::from_off_diagonal(n, &off).unwrap()).unwrap()
        })
    })
}

fn model_and_features() -> impl Strategy<Value = (FcmModel, Vec<f64>)> {
    model().prop_flat_map(|m| {
        let n = m.n_input();
        (Just(m), prop::collection::vec(0.0f64..=1.0, n))
    })
}

fn bundle(dim: usize) -> impl Strategy<Value = ContributionBundle> {
    (
        prop::collection::vec(-1.0f64..=1.0, dim * dim - dim),
        0.01f64..=1.0,
        0.0f64..=1.0,
    )
        .prop_map(move |(off, accuracy, precision)| ContributionBundle {
            participant_id: String::new(),
            matrix: SquareMatrix::from_off_diagonal(dim, &off).unwrap(),
            accuracy,
            precision,
            dataset_size: 1,
        })
}

proptest! {
    #[test]
    fn dynamics_are_deterministic((m, x) in model_and_features()) {
        let cfg = DynamicsConfig::default();
        let init = m.initial_state(&x).unwrap();
        let a = run_dynamics(&m, &init, &cfg).unwrap();
        let b = run_dynamics(&m, &init, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn converged_state_is_nearly_fixed((m, x) in model_and_features()) {
        let cfg = DynamicsConfig { clamp_inputs: false, ..DynamicsConfig::default() };
        let out = run_dynamics(&m, &m.initial_state(&x).unwrap(), &cfg).unwrap();
        if out.status == DynamicsStatus::Converged {
            // the next step moves at most slope * n times as far as the last one did
            let again = step(&m, &out.final_state).unwrap();
            let lipschitz = m.slope() * m.n_nodes() as f64;
            prop_assert!(again.max_abs_diff(&out.final_state) <= cfg.tolerance * lipschitz.max(1.0));
        } else {
            prop_assert_eq!(out.iterations_used, cfg.max_iterations);
        }
    }

    #[test]
    fn outputs_stay_in_range((m, x) in model_and_features()) {
        let (lo, hi) = m.activation().range();
        let out = run_dynamics(&m, &m.initial_state(&x).unwrap(), &DynamicsConfig::default()).unwrap();
        for (i, v) in out.final_state.0.iter().enumerate().skip(m.n_input()) {
            prop_assert!(lo < *v && *v < hi, "node {} = {}", i, v);
        }
    }

    #[test]
    fn argmax_ignores_monotone_maps(values in prop::collection::vec(-5.0f64..5.0, 1..8), a in 0.1f64..3.0, b in -2.0f64..2.0) {
        let mapped: Vec<f64> = values.iter().map(|v| (a * v + b).tanh() + v.exp()).collect();
        prop_assert_eq!(argmax(&values), argmax(&mapped));
    }

    #[test]
    fn accuracy_weights_are_scale_invariant(bundles in prop::collection::vec(bundle(4), 1..6), c in 0.05f64..1.0) {
        let scaled: Vec<ContributionBundle> = bundles
            .iter()
            .map(|b| ContributionBundle { accuracy: b.accuracy * c, ..b.clone() })
            .collect();
        let a = aggregate(&bundles, WeightScheme::AccuracyBased).unwrap();
        let s = aggregate(&scaled, WeightScheme::AccuracyBased).unwrap();
        for (x, y) in a.iter().zip(s.iter()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn aggregate_of_identical_matrices_is_that_matrix(b in bundle(3), n in 1usize..6) {
        let copies = vec![b.clone(); n];
        for scheme in [WeightScheme::Constant, WeightScheme::AccuracyBased, WeightScheme::PrecisionBased] {
            let agg = aggregate(&copies, scheme).unwrap();
            for (x, y) in agg.iter().zip(b.matrix.iter()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!(agg.diagonal_is_zero());
        }
    }

    #[test]
    fn normalization_is_idempotent(rows in prop::collection::vec((-50.0f64..50.0, 0usize..3, any::<bool>()), 2..30)) {
        let csv: String = std::iter::once("x,colour,label\n".to_string())
            .chain(rows.iter().map(|(x, c, l)| format!("{x},{},{}\n", ["red", "green", "blue"][*c], u8::from(*l))))
            .collect();
        let raw = data::read_csv(csv.as_bytes(), &CsvOptions::default()).unwrap();
        let stats = NormalizationStats::fit(&raw).unwrap();
        let ds = stats.transform(&raw).unwrap();
        for row in &ds.features {
            for v in row {
                prop_assert!((0.0..=1.0).contains(v));
            }
        }
        // feeding the normalized numeric column back in changes nothing when its range is [0, 1]
        let again_csv: String = std::iter::once("x,colour,label\n".to_string())
            .chain(ds.features.iter().zip(&rows).map(|(f, (_, c, l))| format!("{},{},{}\n", f[0], ["red", "green", "blue"][*c], u8::from(*l))))
            .collect();
        let again_raw = data::read_csv(again_csv.as_bytes(), &CsvOptions::default()).unwrap();
        let again = NormalizationStats::fit(&again_raw).unwrap().transform(&again_raw).unwrap();
        let spans_unit = ds.features.iter().any(|r| r[0] == 0.0) && ds.features.iter().any(|r| r[0] == 1.0);
        if spans_unit {
            for (a, b) in again.features.iter().zip(&ds.features) {
                prop_assert!((a[0] - b[0]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn positive_rates_add_up(labels in prop::collection::vec(any::<bool>(), 10..120), parts in 1usize..5, seed in any::<u64>()) {
        let n = labels.len();
        let ds = data::Dataset::new(
            (0..n).map(|i| vec![i as f64 / n as f64]).collect(),
            labels.clone(),
            vec!["i".into()],
        ).unwrap();
        let spec = data::PartitionSpec::even(parts, seed);
        prop_assume!(n >= 2 * parts);
        let shares = data::partition(&ds, &spec).unwrap();
        let positives: f64 = shares.iter().map(|s| s.positive_rate() * s.len() as f64).sum();
        let expected = labels.iter().filter(|&&l| l).count() as f64;
        prop_assert!((positives - expected).abs() < 1e-9);
        prop_assert_eq!(shares.iter().map(|s| s.len()).sum::<usize>(), n);
    }

    #[test]
    fn config_survives_json(rounds in 0usize..50, seeds in prop::collection::vec(0u64..1000, 1..6), fraction in 0.05f64..0.5) {
        let mut cfg = ExperimentConfig::from_json(
            r#"{"dataset": {"path": "x.csv", "label_column": "y"},
                "partitions": [{"name": "even", "proportions": [0.5, 0.5]}],
                "modes": ["blind", "blended"], "schemes": ["precision"],
                "shapes": [{"activation": "tanh", "slope": 2.0}]}"#,
        )
        .unwrap();
        cfg.rounds = rounds;
        cfg.seeds = seeds;
        cfg.test_fraction = fraction;
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn model_json_is_bit_exact(m in model()) {
        let back = FcmModel::from_json(&m.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.weights().as_slice(), m.weights().as_slice());
        prop_assert_eq!(back.slope().to_bits(), m.slope().to_bits());
    }
}

#[test]
fn state_vector_distance_is_max_norm() {
    let a = StateVector(vec![0.1, 0.5, 0.9]);
    let b = StateVector(vec![0.2, 0.1, 0.9]);
    assert!((a.max_abs_diff(&b) - 0.4).abs() < 1e-15);
}
