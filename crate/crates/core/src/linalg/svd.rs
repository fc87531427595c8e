use nalgebra::{DMatrix, DVector, SVD};

use crate::embedding::EmbeddingMatrix;
use crate::error::{validation, Result, ToraError};

/// Thin singular value decomposition `e = U diag(λ) Vᵀ` with `r = min(V, d)`.
///
/// Singular values are sorted in non-increasing order. Signs are fixed so that
/// the largest-magnitude entry of every right singular vector is positive (the
/// lowest index wins ties), which makes the factorization reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `V x r`, orthonormal columns.
    pub left: DMatrix<f64>,
    /// Length `r`, non-negative, non-increasing.
    pub singular_values: DVector<f64>,
    /// `r x d`; row `i` is the i-th right singular vector.
    pub right: DMatrix<f64>,
}

impl SvdFactors {
    pub fn rank_dim(&self) -> usize {
        self.singular_values.len()
    }

    /// Right singular vector `i` (0-based) as a column vector.
    pub fn right_vector(&self, i: usize) -> DVector<f64> {
        self.right.row(i).transpose()
    }

    /// `U diag(values) right`, for a replacement spectrum and right factor.
    pub fn reconstruct_with(&self, values: &DVector<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
        let mut scaled = self.left.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(values.iter()) {
            col *= v;
        }
        scaled * right
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.reconstruct_with(&self.singular_values, &self.right)
    }
}

pub fn svd(e: &EmbeddingMatrix) -> Result<SvdFactors> {
    svd_matrix(e.as_matrix())
}

/// SVD of an arbitrary finite matrix (e.g. mean-centered data).
pub fn svd_matrix(m: &DMatrix<f64>) -> Result<SvdFactors> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(validation!("cannot decompose an empty matrix"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(validation!("cannot decompose a matrix with non-finite entries"));
    }
    let raw = SVD::try_new(m.clone(), true, true, f64::EPSILON, 0).ok_or_else(|| {
        ToraError::NumericalFailure {
            timestep: 0,
            block: 0,
            detail: "SVD did not converge".into(),
        }
    })?;
    let u = raw.u.expect("left vectors requested");
    let v_t = raw.v_t.expect("right vectors requested");
    let sv = raw.singular_values;

    let r = sv.len();
    let mut order: Vec<usize> = (0..r).collect();
    // stable sort keeps the solver order among equal values
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let mut left = DMatrix::zeros(m.nrows(), r);
    let mut right = DMatrix::zeros(r, m.ncols());
    let mut values = DVector::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        let mut row = v_t.row(src).into_owned();
        let mut col = u.column(src).into_owned();
        let pivot = largest_magnitude_index(row.iter().copied());
        if row[pivot] < 0.0 {
            row.neg_mut();
            col.neg_mut();
        }
        right.set_row(dst, &row);
        left.set_column(dst, &col);
        values[dst] = sv[src].max(0.0);
    }
    Ok(SvdFactors {
        left,
        singular_values: values,
        right,
    })
}

fn largest_magnitude_index(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    best
}
