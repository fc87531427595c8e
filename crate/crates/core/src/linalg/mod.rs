//! Shared numerical primitives: SVD, elbow detection, subspace projection,
//! plane rotations and cosine similarity.

mod elbow;
mod rotation;
mod svd;

pub use elbow::mdc_elbow;
pub use rotation::{apply_rotation, build_plane_rotation, cosine, project_onto_complement, PlaneRotation};
pub use svd::{svd, svd_matrix, SvdFactors};

use nalgebra::DMatrix;

use crate::error::{validation, Result};

/// Elbow index `k` with the principal (`v_1..v_k`) and residual
/// (`v_{k+1}..v_r`) right singular vectors as `d x k` / `d x (r-k)` column bases.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalSplit {
    pub k: usize,
    pub principal: DMatrix<f64>,
    pub residual: DMatrix<f64>,
}

impl PrincipalSplit {
    /// Splits the factors after the first `k` singular directions.
    pub fn new(factors: &SvdFactors, k: usize) -> Result<Self> {
        let r = factors.rank_dim();
        if k == 0 || k >= r {
            return Err(validation!(
                "split index k = {k} must lie in [1, {}] for {r} singular directions",
                r.saturating_sub(1)
            ));
        }
        let basis = factors.right.transpose();
        Ok(Self {
            k,
            principal: basis.columns(0, k).into_owned(),
            residual: basis.columns(k, r - k).into_owned(),
        })
    }

    /// Splits at the maximum-distance-to-chord elbow of the spectrum.
    pub fn from_elbow(factors: &SvdFactors) -> Result<Self> {
        let k = mdc_elbow(factors.singular_values.as_slice())?;
        Self::new(factors, k)
    }

    /// `[principal residual]` as one `d x r` matrix.
    pub fn full_basis(&self) -> DMatrix<f64> {
        let d = self.principal.nrows();
        let mut out = DMatrix::zeros(d, self.principal.ncols() + self.residual.ncols());
        out.columns_mut(0, self.k).copy_from(&self.principal);
        out.columns_mut(self.k, self.residual.ncols())
            .copy_from(&self.residual);
        out
    }
}
