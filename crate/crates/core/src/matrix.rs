//! Dense square matrices used as FCM adjacency matrices.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Row-major square matrix. Entry `(i, j)` is the influence of node `i` on node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        SquareMatrix {
            dim,
            data: vec![value; dim * dim],
        }
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        Error::check_len("square matrix data", dim * dim, data.len())?;
        Ok(SquareMatrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            Error::check_len("square matrix row", dim, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { dim, data })
    }

    /// Builds a matrix from its off-diagonal entries in row-major order; the diagonal is zero.
    pub fn from_off_diagonal(dim: usize, values: &[f64]) -> Result<Self> {
        Error::check_len("off-diagonal vector", off_diagonal_len(dim), values.len())?;
        let mut m = SquareMatrix::zeros(dim);
        let mut it = values.iter();
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    m.data[i * dim + j] = *it.next().expect("length checked");
                }
            }
        }
        Ok(m)
    }

    pub fn off_diagonal(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(off_diagonal_len(self.dim));
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    out.push(self.data[i * self.dim + j]);
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.dim.max(1))
            .take(self.dim)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Element-wise combination of two matrices of equal dimension.
    pub fn zip_with(
        &self,
        other: &SquareMatrix,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<SquareMatrix> {
        Error::check_len("matrix dimension", self.dim, other.dim)?;
        Ok(SquareMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn diagonal_is_zero(&self) -> bool {
        (0..self.dim).all(|i| self.get(i, i) == 0.0)
    }

    pub fn entries_within(&self, lo: f64, hi: f64) -> bool {
        self.data.iter().all(|&x| (lo..=hi).contains(&x))
    }
}

/// Number of off-diagonal entries of an `n x n` matrix.
pub fn off_diagonal_len(n: usize) -> usize {
    n * n.saturating_sub(1)
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        SquareMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
