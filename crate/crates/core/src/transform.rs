//! The embedding intervention: variance scale-up, token spacing on the
//! principal singular values, and residual alignment of the residual basis
//! towards a semantic direction.

use nalgebra::{DMatrix, DVector};

use crate::embedding::EmbeddingMatrix;
use crate::error::{degenerate, validation, Result, ToraError};
use crate::linalg::{
    apply_rotation, build_plane_rotation, project_onto_complement, svd, PlaneRotation,
    PrincipalSplit, SvdFactors,
};

pub const DEFAULT_SIGMA: f64 = 1.3;
/// Projected semantic vectors at or below this norm skip alignment.
pub const SEMANTIC_NORM_FLOOR: f64 = 1e-10;
const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// One scalar variance for the whole matrix.
    #[default]
    PerMatrixScalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegenerateSemanticPolicy {
    /// Leave the residual basis unchanged and flag the outcome.
    #[default]
    SkipAlignment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToraConfig {
    pub sigma: f64,
    /// Fixed principal dimension; `None` uses the elbow of the spectrum.
    pub elbow_override: Option<usize>,
    pub enable_alignment: bool,
    pub variance_mode: VarianceMode,
    pub degenerate_semantic_policy: DegenerateSemanticPolicy,
}

impl Default for ToraConfig {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            elbow_override: None,
            enable_alignment: true,
            variance_mode: VarianceMode::default(),
            degenerate_semantic_policy: DegenerateSemanticPolicy::default(),
        }
    }
}

impl ToraConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            sigma,
            ..Self::default()
        }
    }

    pub fn validate(&self, rank_dim: usize) -> Result<()> {
        check_sigma(self.sigma)?;
        if let Some(k) = self.elbow_override {
            if k == 0 || k + 1 > rank_dim {
                return Err(ToraError::Configuration(format!(
                    "elbow override k = {k} outside [1, {}]",
                    rank_dim.saturating_sub(1)
                )));
            }
        }
        Ok(())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(ToraError::Configuration(format!(
            "sigma must be a positive finite number, got {sigma}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SemanticSource {
    /// Token-mean of `e_cond - e_null` over this many tokens.
    MeanPooled { tokens: usize },
    Explicit,
}

/// Target direction for residual alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticVector {
    pub direction: DVector<f64>,
    pub source: SemanticSource,
}

impl SemanticVector {
    pub fn new(direction: DVector<f64>) -> Result<Self> {
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(validation!("semantic vector has non-finite entries"));
        }
        Ok(Self {
            direction,
            source: SemanticSource::Explicit,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            direction: DVector::zeros(dim),
            source: SemanticSource::Explicit,
        }
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }
}

/// Sum of per-dimension variances over tokens (trace of the token covariance).
pub fn total_variance(e: &EmbeddingMatrix) -> f64 {
    e.centered().norm_squared() / e.tokens() as f64
}

/// `σ (e - ē) / sqrt(Var(e)) + ē` with `ē` the per-dimension token mean and
/// `Var(e)` the total variance, so the output total variance equals `σ²`.
pub fn variance_scale_up(e: &EmbeddingMatrix, sigma: f64) -> Result<EmbeddingMatrix> {
    check_sigma(sigma)?;
    if e.tokens() < 2 {
        return Err(validation!("variance scale-up needs at least 2 tokens"));
    }
    let var = total_variance(e);
    if var <= VARIANCE_FLOOR {
        return Err(degenerate!("all tokens are identical (total variance {var:e})"));
    }
    let mean = e.as_matrix().row_mean();
    let mut out = e.centered() * (sigma / var.sqrt());
    for mut row in out.row_iter_mut() {
        row += &mean;
    }
    EmbeddingMatrix::new(out)
}

/// Mean over tokens of `e_cond - e_null`.
pub fn pool_semantic_vector(
    e_cond: &EmbeddingMatrix,
    e_null: &EmbeddingMatrix,
) -> Result<SemanticVector> {
    if (e_cond.tokens(), e_cond.dim()) != (e_null.tokens(), e_null.dim()) {
        return Err(validation!(
            "conditional {}x{} and null {}x{} embeddings differ in shape",
            e_cond.tokens(),
            e_cond.dim(),
            e_null.tokens(),
            e_null.dim()
        ));
    }
    let diff = e_cond.as_matrix() - e_null.as_matrix();
    Ok(SemanticVector {
        direction: diff.row_mean().transpose(),
        source: SemanticSource::MeanPooled {
            tokens: e_cond.tokens(),
        },
    })
}

/// Scales the first `split.k` singular values by `sigma`.
pub fn token_spacing(factors: &SvdFactors, split: &PrincipalSplit, sigma: f64) -> DVector<f64> {
    let mut scaled = factors.singular_values.clone();
    for v in scaled.iter_mut().take(split.k) {
        *v *= sigma;
    }
    scaled
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentOutcome {
    /// Rotated residual basis (unchanged when skipped).
    pub residual: DMatrix<f64>,
    pub rotation: Option<PlaneRotation>,
    /// Set when the semantic vector had no component outside the principal space.
    pub skipped: bool,
}

impl AlignmentOutcome {
    pub fn angle(&self) -> Option<f64> {
        self.rotation.as_ref().map(|r| r.angle)
    }
}

/// Rotates the residual basis so its first vector points along the semantic
/// vector with the principal component removed.
pub fn residual_alignment(split: &PrincipalSplit, s: &SemanticVector) -> Result<AlignmentOutcome> {
    if split.residual.ncols() == 0 {
        return Err(ToraError::Configuration(
            "residual alignment needs a non-empty residual basis".into(),
        ));
    }
    if s.dim() != split.principal.nrows() {
        return Err(validation!(
            "semantic vector has dimension {}, embeddings have {}",
            s.dim(),
            split.principal.nrows()
        ));
    }
    let projected = project_onto_complement(&s.direction, &split.principal)?;
    let norm = projected.norm();
    if norm <= SEMANTIC_NORM_FLOOR {
        return Ok(AlignmentOutcome {
            residual: split.residual.clone(),
            rotation: None,
            skipped: true,
        });
    }
    let lead = split.residual.column(0).into_owned();
    let rotation = build_plane_rotation(&lead, &(projected / norm))?;
    let residual = apply_rotation(&rotation, &split.residual)?;
    Ok(AlignmentOutcome {
        residual,
        rotation: Some(rotation),
        skipped: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignmentStatus {
    Applied { angle: f64 },
    /// Semantic vector vanished after projection.
    Skipped,
    Disabled,
}

impl AlignmentStatus {
    pub fn label(&self) -> &'static str {
        match self {
            AlignmentStatus::Applied { .. } => "applied",
            AlignmentStatus::Skipped => "skipped",
            AlignmentStatus::Disabled => "disabled",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            AlignmentStatus::Applied { angle } => Some(*angle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToraOutput {
    pub embedding: EmbeddingMatrix,
    pub k: usize,
    /// Singular values after token spacing.
    pub scaled_values: DVector<f64>,
    pub alignment: AlignmentStatus,
}

/// Decompose, split at the elbow, scale the principal spectrum, optionally
/// align the residual basis, and reconstruct `U Σ̃ [V_pr Ṽ_res]ᵀ`.
pub fn apply_tora(
    e: &EmbeddingMatrix,
    s: &SemanticVector,
    config: &ToraConfig,
) -> Result<ToraOutput> {
    let rank_dim = e.tokens().min(e.dim());
    if rank_dim < 2 {
        return Err(validation!(
            "need min(V, d) >= 2, got a {}x{} matrix",
            e.tokens(),
            e.dim()
        ));
    }
    config.validate(rank_dim)?;
    if s.dim() != e.dim() {
        return Err(validation!(
            "semantic vector has dimension {}, embeddings have {}",
            s.dim(),
            e.dim()
        ));
    }

    let factors = svd(e)?;
    let split = match config.elbow_override {
        Some(k) => PrincipalSplit::new(&factors, k)?,
        None => PrincipalSplit::from_elbow(&factors)?,
    };
    let scaled_values = token_spacing(&factors, &split, config.sigma);

    let (right, alignment) = if config.enable_alignment {
        let outcome = residual_alignment(&split, s)?;
        let status = match outcome.angle() {
            Some(angle) => AlignmentStatus::Applied { angle },
            None => AlignmentStatus::Skipped,
        };
        let aligned = PrincipalSplit {
            k: split.k,
            principal: split.principal.clone(),
            residual: outcome.residual,
        };
        (aligned.full_basis().transpose(), status)
    } else {
        (factors.right.clone(), AlignmentStatus::Disabled)
    };

    let embedding = EmbeddingMatrix::new(factors.reconstruct_with(&scaled_values, &right))?;
    Ok(ToraOutput {
        embedding,
        k: split.k,
        scaled_values,
        alignment,
    })
}
