//! Fuzzy cognitive map classifiers and their iterative dynamics.
//!
//! A map is a signed, weighted digraph over `n_input` feature nodes followed by
//! `n_output` class nodes. Node states are updated with
//! `c_i(t) = f(sum_j w[j][i] * c_j(t - 1))` until two successive states agree
//! within a tolerance, and the predicted class is the output node with the
//! largest final activation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Largest `f64` strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    /// `1 / (1 + e^(-slope * x))`, range (0, 1).
    #[serde(rename = "sigmoid")]
    UnipolarSigmoid,
    /// `tanh(slope * x)`, range (-1, 1).
    #[serde(rename = "tanh")]
    HyperbolicTangent,
}

impl Activation {
    /// Open range of the activation as `(lower, upper)`.
    pub fn range(self) -> (f64, f64) {
        match self {
            Activation::UnipolarSigmoid => (0.0, 1.0),
            Activation::HyperbolicTangent => (-1.0, 1.0),
        }
    }

    /// Value of the activation at zero; used as the initial state of output nodes.
    pub fn neutral(self) -> f64 {
        match self {
            Activation::UnipolarSigmoid => 0.5,
            Activation::HyperbolicTangent => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::UnipolarSigmoid => "sigmoid",
            Activation::HyperbolicTangent => "tanh",
        }
    }

    /// Saturated results are pulled back to the nearest representable value
    /// inside the open range, so the output never touches a bound.
    #[inline]
    fn apply_unchecked(self, x: f64, slope: f64) -> f64 {
        match self {
            Activation::UnipolarSigmoid => {
                (1.0 / (1.0 + (-slope * x).exp())).clamp(f64::MIN_POSITIVE, BELOW_ONE)
            }
            Activation::HyperbolicTangent => (slope * x).tanh().clamp(-BELOW_ONE, BELOW_ONE),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" | "unipolar_sigmoid" => Ok(Activation::UnipolarSigmoid),
            "tanh" | "hyperbolic_tangent" => Ok(Activation::HyperbolicTangent),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluates the activation `kind` with steepness `slope` at `x`.
pub fn activate(x: f64, kind: Activation, slope: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "slope must be positive, got {slope}"
        )));
    }
    Ok(kind.apply_unchecked(x, slope))
}

/// Node activations at one step of the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Max-norm of the difference between two states of equal length.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        StateVector(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicsStatus {
    Converged,
    /// Also covers limit cycles, which are not detected separately.
    MaxIterationsReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsOutcome {
    pub final_state: StateVector,
    pub status: DynamicsStatus,
    pub iterations_used: usize,
}

/// Settings for [`run_dynamics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Reset input nodes to their initial values after every step.
    pub clamp_inputs: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            tolerance: 1e-5,
            max_iterations: 100,
            clamp_inputs: true,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Number of feature and class nodes plus the activation settings of a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub n_input: usize,
    pub n_output: usize,
    pub activation: Activation,
    pub slope: f64,
}

impl ModelShape {
    pub fn new(n_input: usize, n_output: usize, activation: Activation, slope: f64) -> Self {
        ModelShape {
            n_input,
            n_output,
            activation,
            slope,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_input + self.n_output
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_output == 0 {
            return Err(Error::InvalidModel(
                "a model needs at least one output node".into(),
            ));
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "slope must be positive, got {}",
                self.slope
            )));
        }
        Ok(())
    }
}

/// A fuzzy cognitive map classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FcmModel {
    shape: ModelShape,
    weights: SquareMatrix,
    node_names: Option<Vec<String>>,
}

impl FcmModel {
    /// Builds a model, checking weight range, zero diagonal and slope.
    pub fn new(shape: ModelShape, weights: SquareMatrix) -> Result<Self> {
        shape.validate()?;
        Error::check_len("model weights", shape.n_nodes(), weights.dim())?;
        if let Some(bad) = weights.iter().find(|w| !(-1.0..=1.0).contains(*w)) {
            return Err(Error::InvalidModel(format!("weight {bad} outside [-1, 1]")));
        }
        if !weights.diagonal_is_zero() {
            return Err(Error::InvalidModel("diagonal weights must be zero".into()));
        }
        Ok(FcmModel {
            shape,
            weights,
            node_names: None,
        })
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Result<Self> {
        Error::check_len("node names", self.shape.n_nodes(), names.len())?;
        self.node_names = Some(names);
        Ok(self)
    }

    pub fn zeros(shape: ModelShape) -> Result<Self> {
        FcmModel::new(shape, SquareMatrix::zeros(shape.n_nodes()))
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn n_input(&self) -> usize {
        self.shape.n_input
    }

    pub fn n_output(&self) -> usize {
        self.shape.n_output
    }

    pub fn n_nodes(&self) -> usize {
        self.shape.n_nodes()
    }

    pub fn activation(&self) -> Activation {
        self.shape.activation
    }

    pub fn slope(&self) -> f64 {
        self.shape.slope
    }

    pub fn weights(&self) -> &SquareMatrix {
        &self.weights
    }

    pub fn into_weights(self) -> SquareMatrix {
        self.weights
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    /// Initial state for a feature vector: features, then the activation's neutral value.
    pub fn initial_state(&self, features: &[f64]) -> Result<StateVector> {
        Error::check_len("feature vector", self.n_input(), features.len())?;
        let mut values = Vec::with_capacity(self.n_nodes());
        values.extend_from_slice(features);
        values.resize(self.n_nodes(), self.activation().neutral());
        Ok(StateVector(values))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelDocument>(text)?.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FcmModel::from_json(&text)
    }
}

/// JSON form of a model. Weights are written with the shortest decimal
/// representation that parses back to the same `f64`, so they round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub n_input: usize,
    pub n_output: usize,
    pub activation: Activation,
    pub slope: f64,
    pub weights: SquareMatrix,
    #[serde(default)]
    pub node_names: Option<Vec<String>>,
}

impl From<&FcmModel> for ModelDocument {
    fn from(m: &FcmModel) -> Self {
        ModelDocument {
            n_input: m.n_input(),
            n_output: m.n_output(),
            activation: m.activation(),
            slope: m.slope(),
            weights: m.weights.clone(),
            node_names: m.node_names.clone(),
        }
    }
}

impl TryFrom<ModelDocument> for FcmModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        let shape = ModelShape::new(doc.n_input, doc.n_output, doc.activation, doc.slope);
        let model = FcmModel::new(shape, doc.weights)?;
        match doc.node_names {
            Some(names) => model.with_node_names(names),
            None => Ok(model),
        }
    }
}

/// One synchronous update of every node.
pub fn step(model: &FcmModel, state: &StateVector) -> Result<StateVector> {
    Error::check_len("state vector", model.n_nodes(), state.len())?;
    let mut next = vec![0.0; state.len()];
    step_into(model, &state.0, &mut next, 0)?;
    Ok(StateVector(next))
}

/// Updates nodes `first..n` of `next` from `current`; earlier entries are left untouched.
fn step_into(model: &FcmModel, current: &[f64], next: &mut [f64], first: usize) -> Result<()> {
    let n = model.n_nodes();
    let w = model.weights.as_slice();
    let (kind, slope) = (model.activation(), model.slope());
    for i in first..n {
        let mut sum = 0.0;
        for (j, c) in current.iter().enumerate() {
            sum += w[j * n + i] * c;
        }
        if !sum.is_finite() {
            return Err(Error::NonFinite(sum));
        }
        next[i] = kind.apply_unchecked(sum, slope);
    }
    Ok(())
}

/// Iterates [`step`] from `initial` until the max-norm change drops below the
/// tolerance or the iteration budget runs out.
pub fn run_dynamics(
    model: &FcmModel,
    initial: &StateVector,
    config: &DynamicsConfig,
) -> Result<DynamicsOutcome> {
    config.validate()?;
    Error::check_len("state vector", model.n_nodes(), initial.len())?;

    let first = if config.clamp_inputs {
        model.n_input()
    } else {
        0
    };
    let mut current = initial.0.clone();
    let mut next = initial.0.clone();
    for iteration in 1..=config.max_iterations {
        step_into(model, &current, &mut next, first)?;
        let delta = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut current, &mut next);
        if delta < config.tolerance {
            return Ok(DynamicsOutcome {
                final_state: StateVector(current),
                status: DynamicsStatus::Converged,
                iterations_used: iteration,
            });
        }
    }
    Ok(DynamicsOutcome {
        final_state: StateVector(current),
        status: DynamicsStatus::MaxIterationsReached,
        iterations_used: config.max_iterations,
    })
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Final output-node activations for one feature vector.
pub fn output_activations(
    model: &FcmModel,
    features: &[f64],
    config: &DynamicsConfig,
) -> Result<Vec<f64>> {
    let initial = model.initial_state(features)?;
    let outcome = run_dynamics(model, &initial, config)?;
    Ok(outcome.final_state.0[model.n_input()..].to_vec())
}

/// Predicted class index of `features` under the default dynamics settings.
pub fn classify(model: &FcmModel, features: &[f64]) -> Result<usize> {
    classify_with(model, features, &DynamicsConfig::default())
}

pub fn classify_with(model: &FcmModel, features: &[f64], config: &DynamicsConfig) -> Result<usize> {
    if model.n_output() < 2 {
        return Err(Error::InvalidModel(
            "classification needs at least two output nodes".into(),
        ));
    }
    Ok(argmax(&output_activations(model, features, config)?))
}

/// Binary prediction (class index 1 is the positive class) for each row.
pub fn predict_binary(
    model: &FcmModel,
    rows: &[Vec<f64>],
    config: &DynamicsConfig,
) -> Result<Vec<bool>> {
    rows.iter()
        .map(|row| classify_with(model, row, config).map(|c| c == 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn free() -> DynamicsConfig {
        DynamicsConfig {
            clamp_inputs: false,
            ..DynamicsConfig::default()
        }
    }

    #[test]
    fn activation_at_zero() {
        for slope in [0.1, 1.0, 2.0, 5.0] {
            assert_eq!(
                activate(0.0, Activation::UnipolarSigmoid, slope).unwrap(),
                0.5
            );
            assert_eq!(
                activate(0.0, Activation::HyperbolicTangent, slope).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn sigmoid_slope_five_at_one() {
        // 1 / (1 + e^-5) to 30 digits: 0.993307149075715144440638019619
        let v = activate(1.0, Activation::UnipolarSigmoid, 5.0).unwrap();
        assert_abs_diff_eq!(v, 0.993_307_149_075_715, epsilon = 1e-6);
    }

    #[test]
    fn activation_rejects_non_finite() {
        assert!(matches!(
            activate(f64::NAN, Activation::UnipolarSigmoid, 1.0),
            Err(Error::NonFinite(_))
        ));
        assert!(activate(f64::INFINITY, Activation::HyperbolicTangent, 1.0).is_err());
        assert!(activate(1.0, Activation::HyperbolicTangent, 0.0).is_err());
    }

    #[test]
    fn activation_saturation_stays_open() {
        let hi = activate(1e6, Activation::UnipolarSigmoid, 5.0).unwrap();
        let lo = activate(-1e6, Activation::UnipolarSigmoid, 5.0).unwrap();
        assert!(hi < 1.0 && lo > 0.0);
        let hi = activate(1e6, Activation::HyperbolicTangent, 2.0).unwrap();
        let lo = activate(-1e6, Activation::HyperbolicTangent, 2.0).unwrap();
        assert!(hi < 1.0 && lo > -1.0);
    }

    #[test]
    fn step_with_zero_weights() {
        let shape = ModelShape::new(2, 2, Activation::UnipolarSigmoid, 5.0);
        let model = FcmModel::zeros(shape).unwrap();
        let next = step(&model, &vec![0.3, 0.9, 0.1, 0.7].into()).unwrap();
        assert_eq!(next.0, vec![0.5; 4]);

        let shape = ModelShape::new(2, 2, Activation::HyperbolicTangent, 2.0);
        let model = FcmModel::zeros(shape).unwrap();
        let next = step(&model, &vec![0.3, 0.9, 0.1, 0.7].into()).unwrap();
        assert_eq!(next.0, vec![0.0; 4]);
    }

    #[test]
    fn step_two_node_tanh() {
        let shape = ModelShape::new(1, 1, Activation::HyperbolicTangent, 2.0);
        let w = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let model = FcmModel::new(shape, w).unwrap();
        let next = step(&model, &vec![0.5, 0.0].into()).unwrap();
        // tanh(2 * 0.5 * 1) = tanh(1) = 0.761594155955764888...
        assert_abs_diff_eq!(next.0[1], 0.761_594_155_955_764_9, epsilon = 1e-6);
        assert_eq!(next.0[0], 0.0);
    }

    #[test]
    fn step_dimension_mismatch() {
        let model =
            FcmModel::zeros(ModelShape::new(2, 2, Activation::UnipolarSigmoid, 1.0)).unwrap();
        assert!(matches!(
            step(&model, &vec![0.0; 3].into()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_weights_converge_in_two_steps() {
        let model =
            FcmModel::zeros(ModelShape::new(3, 2, Activation::UnipolarSigmoid, 5.0)).unwrap();
        let out = run_dynamics(&model, &vec![0.9, 0.1, 0.4, 0.0, 1.0].into(), &free()).unwrap();
        assert_eq!(out.status, DynamicsStatus::Converged);
        assert_eq!(out.iterations_used, 2);
        assert_eq!(out.final_state.0, vec![0.5; 5]);
    }

    #[test]
    fn single_node_converges_immediately() {
        let model =
            FcmModel::zeros(ModelShape::new(0, 1, Activation::UnipolarSigmoid, 1.0)).unwrap();
        let out = run_dynamics(&model, &vec![0.5].into(), &free()).unwrap();
        assert_eq!(out.status, DynamicsStatus::Converged);
        assert_eq!(out.iterations_used, 1);
    }

    #[test]
    fn clamped_inputs_keep_features() {
        let shape = ModelShape::new(2, 2, Activation::HyperbolicTangent, 2.0);
        let mut w = SquareMatrix::zeros(4);
        w.set(0, 3, 0.8);
        w.set(1, 2, -0.4);
        w.set(3, 0, 1.0);
        let model = FcmModel::new(shape, w).unwrap();
        let init = model.initial_state(&[0.25, 0.75]).unwrap();
        let out = run_dynamics(&model, &init, &DynamicsConfig::default()).unwrap();
        assert_eq!(&out.final_state.0[..2], &[0.25, 0.75]);
        assert_abs_diff_eq!(
            out.final_state.0[3],
            (2.0f64 * 0.8 * 0.25).tanh(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn oscillation_hits_iteration_cap() {
        // A two-node negative loop under tanh with a steep slope flips sign forever.
        let shape = ModelShape::new(0, 2, Activation::HyperbolicTangent, 5.0);
        let w = SquareMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let model = FcmModel::new(shape, w).unwrap();
        let cfg = DynamicsConfig {
            max_iterations: 50,
            ..free()
        };
        let out = run_dynamics(&model, &vec![0.9, 0.0].into(), &cfg).unwrap();
        assert_eq!(out.status, DynamicsStatus::MaxIterationsReached);
        assert_eq!(out.iterations_used, 50);
    }

    #[test]
    fn argmax_tie_breaks_low() {
        assert_eq!(argmax(&[0.03, 0.8]), 1);
        assert_eq!(argmax(&[0.4, 0.4]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn zero_weight_classifier_picks_class_zero() {
        let model =
            FcmModel::zeros(ModelShape::new(3, 2, Activation::UnipolarSigmoid, 5.0)).unwrap();
        assert_eq!(classify(&model, &[0.2, 0.4, 0.9]).unwrap(), 0);
        assert!(classify(&model, &[0.2]).is_err());
    }

    #[test]
    fn invalid_models_rejected() {
        let shape = ModelShape::new(1, 1, Activation::UnipolarSigmoid, 1.0);
        let diag = SquareMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(FcmModel::new(shape, diag).is_err());
        let big = SquareMatrix::from_rows(&[vec![0.0, 1.5], vec![0.0, 0.0]]).unwrap();
        assert!(FcmModel::new(shape, big).is_err());
        let bad_slope = ModelShape::new(1, 1, Activation::UnipolarSigmoid, 0.0);
        assert!(FcmModel::zeros(bad_slope).is_err());
    }

    #[test]
    fn json_schema_and_exact_round_trip() {
        let shape = ModelShape::new(1, 2, Activation::HyperbolicTangent, 2.0);
        let w = SquareMatrix::from_rows(&[
            vec![0.0, 0.1 + 0.2, -1.0 / 3.0],
            vec![std::f64::consts::FRAC_1_SQRT_2, 0.0, 1e-17],
            vec![-0.999_999_999_999_999_9, 0.123_456_789_012_345_67, 0.0],
        ])
        .unwrap();
        let model = FcmModel::new(shape, w)
            .unwrap()
            .with_node_names(vec!["f0".into(), "benign".into(), "malignant".into()])
            .unwrap();
        let json = model.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["activation"], "tanh");
        assert_eq!(value["n_input"], 1);
        assert_eq!(value["weights"].as_array().unwrap().len(), 3);
        let back = FcmModel::from_json(&json).unwrap();
        for (a, b) in back.weights().iter().zip(model.weights().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back, model);
    }

    #[test]
    fn json_without_names() {
        let json = r#"{"n_input":1,"n_output":1,"activation":"sigmoid","slope":5,
                       "weights":[[0,0.25],[-0.5,0]]}"#;
        let model = FcmModel::from_json(json).unwrap();
        assert_eq!(model.activation(), Activation::UnipolarSigmoid);
        assert!(model.node_names().is_none());
    }
}
