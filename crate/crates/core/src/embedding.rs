use nalgebra::{DMatrix, DVector};

use crate::error::{validation, Result};

/// A `V x d` matrix of token embeddings, one row per token.
///
/// Construction rejects non-finite entries, so every downstream operation can
/// assume finite input.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix(DMatrix<f64>);

impl EmbeddingMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(validation!(
                "embedding matrix must be non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            // nalgebra storage is column-major
            let (row, col) = (pos % matrix.nrows(), pos / matrix.nrows());
            return Err(validation!("non-finite entry at ({row}, {col})"));
        }
        Ok(Self(matrix))
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_row_slice(tokens: usize, dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != tokens * dim {
            return Err(validation!(
                "buffer of {} values cannot fill a {tokens}x{dim} matrix",
                data.len()
            ));
        }
        Self::new(DMatrix::from_row_slice(tokens, dim, data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let tokens = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(validation!("ragged rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(tokens, dim, &flat)
    }

    /// Number of tokens (rows).
    pub fn tokens(&self) -> usize {
        self.0.nrows()
    }

    /// Embedding width (columns).
    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.0.row(i).transpose()
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.0.len());
        for r in self.0.row_iter() {
            out.extend(r.iter().copied());
        }
        out
    }

    /// Per-dimension mean over tokens.
    pub fn mean_row(&self) -> DVector<f64> {
        self.0.row_mean().transpose()
    }

    /// The matrix with its mean row subtracted from every row.
    pub fn centered(&self) -> DMatrix<f64> {
        let mean = self.0.row_mean();
        let mut out = self.0.clone();
        for mut r in out.row_iter_mut() {
            r -= &mean;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

impl AsRef<DMatrix<f64>> for EmbeddingMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}
