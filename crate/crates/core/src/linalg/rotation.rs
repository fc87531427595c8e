use nalgebra::{DMatrix, DVector};

use crate::error::{degenerate, validation, Result};

const UNIT_TOLERANCE: f64 = 1e-8;
const NORM_FLOOR: f64 = 1e-12;
// below this in-plane component the two inputs are treated as (anti)parallel
const PARALLEL_TOLERANCE: f64 = 1e-11;

/// A rotation by `angle` in the plane spanned by two orthonormal axes.
///
/// It acts as `x -> x + (cos θ - 1)(a aᵀ + b bᵀ) x + sin θ (b aᵀ - a bᵀ) x`,
/// mapping `axis_a` towards `axis_b` and leaving the orthogonal complement of
/// the plane untouched. The dense `d x d` matrix is never formed.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneRotation {
    pub axis_a: DVector<f64>,
    pub axis_b: DVector<f64>,
    /// Radians in `[0, π]`.
    pub angle: f64,
}

impl PlaneRotation {
    pub fn dim(&self) -> usize {
        self.axis_a.len()
    }

    pub fn is_identity(&self) -> bool {
        self.angle == 0.0
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(validation!(
                "rotation acts on dimension {}, got a vector of length {}",
                self.dim(),
                x.len()
            ));
        }
        let mut out = x.clone();
        self.apply_in_place(out.as_mut_slice());
        Ok(out)
    }

    fn apply_in_place(&self, x: &mut [f64]) {
        if self.is_identity() {
            return;
        }
        let (sin, cos) = self.angle.sin_cos();
        let a = self.axis_a.as_slice();
        let b = self.axis_b.as_slice();
        let pa: f64 = a.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
        let pb: f64 = b.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
        // in-plane coordinates (pa, pb) -> (cos pa - sin pb, sin pa + cos pb)
        let da = (cos - 1.0) * pa - sin * pb;
        let db = sin * pa + (cos - 1.0) * pb;
        for ((xi, ai), bi) in x.iter_mut().zip(a).zip(b) {
            *xi += da * ai + db * bi;
        }
    }
}

/// Builds the plane rotation taking unit vector `from` onto unit vector `to`.
///
/// When `to = from` the identity is returned. When `to = -from` the plane is
/// not determined by the inputs; the second axis is then the lowest-index
/// standard basis vector with a nonzero component orthogonal to `from`.
pub fn build_plane_rotation(from: &DVector<f64>, to: &DVector<f64>) -> Result<PlaneRotation> {
    if from.len() != to.len() {
        return Err(validation!(
            "dimension mismatch: {} vs {}",
            from.len(),
            to.len()
        ));
    }
    if from.is_empty() {
        return Err(validation!("cannot rotate in dimension 0"));
    }
    for (name, v) in [("from", from), ("to", to)] {
        let n = v.norm();
        if n <= NORM_FLOOR {
            return Err(degenerate!("'{name}' has zero norm"));
        }
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(validation!("'{name}' must be unit-norm, has norm {n}"));
        }
    }

    let axis_a = from.normalize();
    let target = to.normalize();
    let c = axis_a.dot(&target);
    let mut w = &target - &axis_a * c;
    // second Gram-Schmidt pass keeps axis_b orthogonal to axis_a to rounding
    let c2 = axis_a.dot(&w);
    w -= &axis_a * c2;
    let s = w.norm();

    if s <= PARALLEL_TOLERANCE {
        let axis_b = antipodal_axis(&axis_a)?;
        let angle = if c > 0.0 { 0.0 } else { std::f64::consts::PI };
        return Ok(PlaneRotation {
            axis_a,
            axis_b,
            angle,
        });
    }
    Ok(PlaneRotation {
        axis_a,
        axis_b: w / s,
        angle: s.atan2(c),
    })
}

fn antipodal_axis(axis_a: &DVector<f64>) -> Result<DVector<f64>> {
    let d = axis_a.len();
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        let mut w = &e - axis_a * axis_a[i];
        let proj = axis_a.dot(&w);
        w -= axis_a * proj;
        let n = w.norm();
        if n > UNIT_TOLERANCE {
            return Ok(w / n);
        }
    }
    // only reachable for d = 1, where no plane exists
    Err(degenerate!(
        "no plane orthogonal to a vector exists in dimension {d}"
    ))
}

/// Applies the rotation to every column of a `d x m` matrix.
pub fn apply_rotation(rot: &PlaneRotation, vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if vectors.nrows() != rot.dim() {
        return Err(validation!(
            "rotation acts on dimension {}, got {} rows",
            rot.dim(),
            vectors.nrows()
        ));
    }
    let mut out = vectors.clone();
    for mut col in out.column_iter_mut() {
        // columns of a column-major matrix are contiguous
        let slice = col.as_mut_slice();
        rot.apply_in_place(slice);
    }
    Ok(out)
}

/// `s - B Bᵀ s` for a basis `B` with orthonormal columns.
pub fn project_onto_complement(s: &DVector<f64>, basis: &DMatrix<f64>) -> Result<DVector<f64>> {
    if basis.nrows() != s.len() {
        return Err(validation!(
            "basis has {} rows but vector has length {}",
            basis.nrows(),
            s.len()
        ));
    }
    let coeffs = basis.tr_mul(s);
    Ok(s - basis * coeffs)
}

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(validation!("dimension mismatch: {} vs {}", a.len(), b.len()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na <= NORM_FLOOR || nb <= NORM_FLOOR {
        return Err(degenerate!(
            "cosine undefined for near-zero norm ({na:e}, {nb:e})"
        ));
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}
