//! Server-side combination of participant adjacency matrices.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// How participant matrices are weighted in the federated average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// Every participant weighs `1 / n`.
    Constant,
    /// Weights are the participants' test accuracies, normalized.
    #[serde(alias = "accuracy")]
    AccuracyBased,
    /// Weights are the participants' test precisions, normalized.
    #[serde(alias = "precision")]
    PrecisionBased,
}

impl WeightScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::Constant => "constant",
            WeightScheme::AccuracyBased => "accuracy",
            WeightScheme::PrecisionBased => "precision",
        }
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(WeightScheme::Constant),
            "accuracy" | "accuracy_based" => Ok(WeightScheme::AccuracyBased),
            "precision" | "precision_based" => Ok(WeightScheme::PrecisionBased),
            other => Err(Error::InvalidConfig(format!(
                "unknown weight scheme `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What one participant hands to the server in a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionBundle {
    pub participant_id: String,
    pub matrix: SquareMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub dataset_size: usize,
}

/// Normalized aggregation weights plus a note when normalization was impossible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationWeights {
    pub weights: Vec<f64>,
    pub warning: Option<String>,
}

/// `raw_i / sum(raw)`. An all-zero input falls back to `1 / n` with a warning.
pub fn normalize_weights(raw: &[f64]) -> Result<AggregationWeights> {
    if raw.is_empty() {
        return Err(Error::Empty("weight vector"));
    }
    if let Some(bad) = raw.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidData(format!(
            "aggregation weight {bad} is not a non-negative number"
        )));
    }
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let warning = format!(
            "all {} raw weights are zero; falling back to constant weights",
            raw.len()
        );
        log::warn!("{warning}");
        return Ok(AggregationWeights {
            weights: constant_weights(raw.len()),
            warning: Some(warning),
        });
    }
    // Equal inputs give exactly 1/n rather than x / (n * x) with rounding.
    let weights = if raw.iter().all(|&x| x == raw[0]) {
        constant_weights(raw.len())
    } else {
        raw.iter().map(|x| x / total).collect()
    };
    Ok(AggregationWeights {
        weights,
        warning: None,
    })
}

fn constant_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Weights the given scheme assigns to `bundles`.
pub fn scheme_weights(
    bundles: &[ContributionBundle],
    scheme: WeightScheme,
) -> Result<AggregationWeights> {
    if bundles.is_empty() {
        return Err(Error::Empty("contribution list"));
    }
    match scheme {
        WeightScheme::Constant => Ok(AggregationWeights {
            weights: constant_weights(bundles.len()),
            warning: None,
        }),
        WeightScheme::AccuracyBased => {
            normalize_weights(&bundles.iter().map(|b| b.accuracy).collect::<Vec<_>>())
        }
        WeightScheme::PrecisionBased => {
            normalize_weights(&bundles.iter().map(|b| b.precision).collect::<Vec<_>>())
        }
    }
}

/// Weighted sum of equally sized matrices, clamped to `[-1, 1]`.
pub fn weighted_average(matrices: &[&SquareMatrix], weights: &[f64]) -> Result<SquareMatrix> {
    let first = matrices.first().ok_or(Error::Empty("matrix list"))?;
    Error::check_len("aggregation weights", matrices.len(), weights.len())?;
    let dim = first.dim();
    let mut acc = vec![0.0; dim * dim];
    for (m, &w) in matrices.iter().zip(weights) {
        Error::check_len("aggregated matrix dimension", dim, m.dim())?;
        for (a, x) in acc.iter_mut().zip(m.iter()) {
            *a += w * x;
        }
    }
    for a in &mut acc {
        *a = a.clamp(-1.0, 1.0);
    }
    SquareMatrix::from_row_major(dim, acc)
}

/// Federated matrix of the bundles under `scheme`.
pub fn aggregate(bundles: &[ContributionBundle], scheme: WeightScheme) -> Result<SquareMatrix> {
    Ok(aggregate_detailed(bundles, scheme)?.0)
}

/// Like [`aggregate`], also returning the weights that were used.
pub fn aggregate_detailed(
    bundles: &[ContributionBundle],
    scheme: WeightScheme,
) -> Result<(SquareMatrix, AggregationWeights)> {
    let weights = scheme_weights(bundles, scheme)?;
    let matrices: Vec<&SquareMatrix> = bundles.iter().map(|b| &b.matrix).collect();
    let matrix = weighted_average(&matrices, &weights.weights)?;
    Ok((matrix, weights))
}

/// Placement of the two blocks in [`direct_sum_with_layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLayout {
    /// `[[A, 0], [0, B]]`
    #[default]
    Diagonal,
    /// `[[0, A], [B, 0]]`
    AntiDiagonal,
}

/// Block-diagonal direct sum `[[a, 0], [0, b]]`.
pub fn direct_sum(a: &SquareMatrix, b: &SquareMatrix) -> SquareMatrix {
    direct_sum_with_layout(a, b, BlockLayout::Diagonal)
}

pub fn direct_sum_with_layout(
    a: &SquareMatrix,
    b: &SquareMatrix,
    layout: BlockLayout,
) -> SquareMatrix {
    let (n, m) = (a.dim(), b.dim());
    let mut out = SquareMatrix::zeros(n + m);
    for i in 0..n {
        for j in 0..n {
            match layout {
                BlockLayout::Diagonal => out.set(i, j, a.get(i, j)),
                BlockLayout::AntiDiagonal => out.set(i, m + j, a.get(i, j)),
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            out.set(
                n + i,
                j + if layout == BlockLayout::Diagonal {
                    n
                } else {
                    0
                },
                b.get(i, j),
            );
        }
    }
    out
}

/// Augments maps that may share nodes (matched by name).
///
/// The output's node list is the union in first-appearance order. An edge's
/// weight is the mean over the inputs holding both of its endpoints, or 0 when
/// no input holds both.
pub fn merge_common_nodes(
    inputs: &[(SquareMatrix, Vec<String>)],
) -> Result<(SquareMatrix, Vec<String>)> {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (m, node_names) in inputs {
        Error::check_len("node names", m.dim(), node_names.len())?;
        let mut seen = std::collections::HashSet::new();
        for name in node_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidData(format!("duplicate node name `{name}`")));
            }
            if !index.contains_key(name.as_str()) {
                index.insert(name.as_str(), names.len());
                names.push(name.clone());
            }
        }
    }

    let dim = names.len();
    let mut sum = vec![0.0; dim * dim];
    let mut count = vec![0u32; dim * dim];
    for (m, node_names) in inputs {
        let map: Vec<usize> = node_names.iter().map(|n| index[n.as_str()]).collect();
        for (i, &gi) in map.iter().enumerate() {
            for (j, &gj) in map.iter().enumerate() {
                sum[gi * dim + gj] += m.get(i, j);
                count[gi * dim + gj] += 1;
            }
        }
    }
    let data = sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| if c == 0 { 0.0 } else { s / f64::from(c) })
        .collect();
    Ok((SquareMatrix::from_row_major(dim, data)?, names))
}

/// Weighted total of per-participant losses.
pub fn federated_loss(losses: &[f64], weights: &[f64]) -> Result<f64> {
    Error::check_len("loss weights", losses.len(), weights.len())?;
    Ok(losses.iter().zip(weights).map(|(l, w)| l * w).sum())
}
