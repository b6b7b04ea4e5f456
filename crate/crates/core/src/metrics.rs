//! Binary classification metrics over the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[bool], predicted: &[bool]) -> Result<Self> {
        Error::check_len("predicted labels", truth.len(), predicted.len())?;
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => cm.tp += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (true, false) => cm.fn_ += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    /// `tp / (tp + fp)`, or 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        match self.tp + self.fp {
            0 => 0.0,
            n => self.tp as f64 / n as f64,
        }
    }
}

/// Test-set accuracy and precision of one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub precision: f64,
}

impl Scores {
    pub fn from_labels(truth: &[bool], predicted: &[bool]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        let cm = ConfusionMatrix::from_labels(truth, predicted)?;
        Ok(Scores {
            accuracy: cm.accuracy(),
            precision: cm.precision(),
        })
    }
}
