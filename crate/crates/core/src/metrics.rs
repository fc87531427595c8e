//! Geometry diagnostics for embedding matrices.
//!
//! All metrics take the `V x d` token matrix as-is; any centering a metric
//! needs happens inside it.

use nalgebra::{DMatrix, DVector};

use crate::embedding::EmbeddingMatrix;
use crate::error::{degenerate, validation, Result};
use crate::linalg::{cosine, mdc_elbow, svd_matrix};
use crate::transform::SemanticVector;

const NORM_FLOOR: f64 = 1e-12;
/// `|Δγ|` below this counts as no change when comparing signs.
pub const DELTA_GAMMA_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropyScores {
    pub xi_local: f64,
    pub iso_score: f64,
    pub global_anisotropy: f64,
    pub eigen_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaGammaRecord {
    pub gamma_before: f64,
    pub gamma_after: f64,
    /// `gamma_after - gamma_before`.
    pub delta: f64,
    /// Numerator whose sign decides the sign of `delta`.
    pub sign_rule_value: f64,
    /// True when `delta` and `sign_rule_value` share a sign, or `delta` is ~0.
    pub agreement: bool,
}

impl DeltaGammaRecord {
    fn new(gamma_before: f64, gamma_after: f64, sign_rule_value: f64) -> Self {
        let delta = gamma_after - gamma_before;
        let agreement = delta.abs() < DELTA_GAMMA_ZERO
            || (delta > 0.0 && sign_rule_value > 0.0)
            || (delta < 0.0 && sign_rule_value < 0.0);
        Self {
            gamma_before,
            gamma_after,
            delta,
            sign_rule_value,
            agreement,
        }
    }
}

/// Trace of the token covariance, `Σ_j (1/V) Σ_i (e_ij - ē_j)²`.
pub fn eigen_sum(e: &EmbeddingMatrix) -> Result<f64> {
    if e.tokens() < 2 {
        return Err(validation!("eigen_sum needs at least 2 tokens"));
    }
    Ok(e.centered().norm_squared() / e.tokens() as f64)
}

/// Mean cosine over ordered pairs `i != j` of the rows of `m`.
fn mean_pairwise_cosine(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let n = m.nrows();
    let mut normalized = m.clone();
    for (i, mut row) in normalized.row_iter_mut().enumerate() {
        let norm = row.norm();
        if norm <= NORM_FLOOR {
            return Err(degenerate!("{what}: row {i} has near-zero norm"));
        }
        row /= norm;
    }
    // Σ_{i≠j} n_i·n_j = ‖Σ n_i‖² - n for unit rows
    let total = normalized.row_sum().norm_squared();
    Ok((total - n as f64) / (n * (n - 1)) as f64)
}

/// Local isotropy: one minus the absolute mean, over clusters, of the mean
/// pairwise cosine between cluster-centered embeddings.
///
/// Clusters with fewer than two members are left out of the outer mean.
pub fn local_isotropy(e: &EmbeddingMatrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != e.tokens() {
        return Err(validation!(
            "{} labels for {} tokens",
            labels.len(),
            e.tokens()
        ));
    }
    let clusters = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut cluster_means = Vec::new();
    for c in 0..clusters {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < 2 {
            continue;
        }
        let rows: Vec<_> = members.iter().map(|&i| e.as_matrix().row(i)).collect();
        let sub = EmbeddingMatrix::new(DMatrix::from_rows(&rows))?;
        cluster_means.push(mean_pairwise_cosine(
            &sub.centered(),
            &format!("cluster {c}"),
        )?);
    }
    if cluster_means.is_empty() {
        return Err(degenerate!("no cluster has two or more members"));
    }
    let outer = cluster_means.iter().sum::<f64>() / cluster_means.len() as f64;
    Ok((1.0 - outer.abs()).clamp(0.0, 1.0))
}

/// Absolute mean pairwise cosine of the uncentered token embeddings.
pub fn global_anisotropy(e: &EmbeddingMatrix) -> Result<f64> {
    if e.tokens() < 2 {
        return Err(validation!("global anisotropy needs at least 2 tokens"));
    }
    Ok(mean_pairwise_cosine(e.as_matrix(), "global anisotropy")?
        .abs()
        .clamp(0.0, 1.0))
}

/// Intermediate quantities of the IsoScore computation.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoScoreParts {
    /// `√k · diag(Cov) / ‖diag(Cov)‖` of the PCA-projected data.
    pub normalized_diagonal: DVector<f64>,
    /// Isotropy defect δ.
    pub defect: f64,
    /// Dimension occupancy φ.
    pub occupancy: f64,
    /// Rescaled score, clamped to `[0, 1]`.
    pub score: f64,
}

pub fn iso_score(e: &EmbeddingMatrix, k: usize) -> Result<f64> {
    iso_score_parts(e, k).map(|p| p.score)
}

pub fn iso_score_parts(e: &EmbeddingMatrix, k: usize) -> Result<IsoScoreParts> {
    if e.tokens() < 2 {
        return Err(validation!("IsoScore needs at least 2 tokens"));
    }
    if k < 2 {
        return Err(validation!("IsoScore needs k >= 2 principal components, got {k}"));
    }
    let max_k = e.tokens().min(e.dim());
    if k > max_k {
        return Err(validation!("k = {k} exceeds min(V, d) = {max_k}"));
    }
    let centered = e.centered();
    let factors = svd_matrix(&centered)?;
    let components = factors.right.rows(0, k).transpose();
    let projected = &centered * components;

    let v = e.tokens() as f64;
    let diag = DVector::from_iterator(
        k,
        projected.column_iter().map(|col| {
            let mean = col.mean();
            col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v
        }),
    );
    let diag_norm = diag.norm();
    if diag_norm <= NORM_FLOOR {
        return Err(degenerate!("projected covariance vanishes; tokens are identical"));
    }
    let kf = k as f64;
    let root_k = kf.sqrt();
    let normalized_diagonal = diag * (root_k / diag_norm);
    let defect = (normalized_diagonal.add_scalar(-1.0)).norm() / (2.0 * (kf - root_k)).sqrt();
    let occupancy = (kf - defect * defect * (kf - root_k)).powi(2) / (kf * kf);
    let score = ((kf * occupancy - 1.0) / (kf - 1.0)).clamp(0.0, 1.0);
    Ok(IsoScoreParts {
        normalized_diagonal,
        defect,
        occupancy,
        score,
    })
}

/// Principal-component count for IsoScore: the elbow of the centered
/// spectrum, raised to 2 where the elbow lands on 1.
pub fn iso_principal_count(e: &EmbeddingMatrix) -> Result<usize> {
    let factors = svd_matrix(&e.centered())?;
    if factors.rank_dim() < 2 {
        return Err(validation!(
            "IsoScore needs min(V, d) >= 2, got {}x{}",
            e.tokens(),
            e.dim()
        ));
    }
    Ok(mdc_elbow(factors.singular_values.as_slice())?.max(2))
}

/// Change in cosine alignment with `s` between the token means of two matrices.
pub fn delta_gamma(
    s: &SemanticVector,
    before: &EmbeddingMatrix,
    after: &EmbeddingMatrix,
) -> Result<DeltaGammaRecord> {
    if (before.tokens(), before.dim()) != (after.tokens(), after.dim()) {
        return Err(validation!("before/after matrices differ in shape"));
    }
    if s.dim() != before.dim() {
        return Err(validation!(
            "semantic vector has dimension {}, embeddings have {}",
            s.dim(),
            before.dim()
        ));
    }
    let pooled_before = before.mean_row();
    let pooled_after = after.mean_row();
    let gamma_before = cosine(&s.direction, &pooled_before)?;
    let gamma_after = cosine(&s.direction, &pooled_after)?;
    let numerator = s.direction.dot(&pooled_after) * pooled_before.norm()
        - s.direction.dot(&pooled_before) * pooled_after.norm();
    Ok(DeltaGammaRecord::new(gamma_before, gamma_after, numerator))
}

/// Checks the sign rule for `e = ē + u` and `ê = ē + σu`:
/// `sign(Δγ) = sign((s·ē)(‖e‖ - ‖ê‖) + (s·u)(σ‖e‖ - ‖ê‖))`.
pub fn sign_rule_check(
    mean: &DVector<f64>,
    residual: &DVector<f64>,
    s: &DVector<f64>,
    sigma: f64,
) -> Result<DeltaGammaRecord> {
    if mean.len() != residual.len() || mean.len() != s.len() {
        return Err(validation!("vector dimensions differ"));
    }
    let e = mean + residual;
    let e_hat = mean + residual * sigma;
    let (norm_e, norm_hat) = (e.norm(), e_hat.norm());
    if norm_e <= NORM_FLOOR || norm_hat <= NORM_FLOOR || s.norm() <= NORM_FLOOR {
        return Err(degenerate!("sign rule undefined for near-zero norms"));
    }
    let gamma_before = cosine(s, &e)?;
    let gamma_after = cosine(s, &e_hat)?;
    let rule = s.dot(mean) * (norm_e - norm_hat) + s.dot(residual) * (sigma * norm_e - norm_hat);
    Ok(DeltaGammaRecord::new(gamma_before, gamma_after, rule))
}

/// `max(1, ⌊d / 100⌋)`.
pub fn default_removal_count(dim: usize) -> usize {
    (dim / 100).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopRemoval {
    pub embedding: EmbeddingMatrix,
    /// `d x D` orthonormal directions that were projected out.
    pub removed: DMatrix<f64>,
}

/// Subtracts the mean row and projects out the top `D` principal directions.
pub fn all_but_the_top(e: &EmbeddingMatrix, count: Option<usize>) -> Result<TopRemoval> {
    let count = count.unwrap_or_else(|| default_removal_count(e.dim()));
    let limit = e.tokens().min(e.dim());
    if count == 0 || count >= limit {
        return Err(validation!(
            "component count D = {count} must satisfy 1 <= D < min(V, d) = {limit}"
        ));
    }
    let centered = e.centered();
    let factors = svd_matrix(&centered)?;
    let removed = factors.right.rows(0, count).transpose();
    let coords = &centered * &removed;
    let out = centered - coords * removed.transpose();
    Ok(TopRemoval {
        embedding: EmbeddingMatrix::new(out)?,
        removed,
    })
}

/// All four isotropy metrics for one matrix, given cluster labels.
pub fn isotropy_scores(e: &EmbeddingMatrix, labels: &[usize]) -> Result<IsotropyScores> {
    let k = iso_principal_count(e)?;
    Ok(IsotropyScores {
        xi_local: local_isotropy(e, labels)?,
        iso_score: iso_score(e, k)?,
        global_anisotropy: global_anisotropy(e)?,
        eigen_sum: eigen_sum(e)?,
    })
}
