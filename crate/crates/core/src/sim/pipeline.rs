use nalgebra::DMatrix;

use super::block::{joint_attention_block, AttentionCombine, AttentionMap, BlockState};
use super::weights::ToyModelWeights;
use crate::embedding::EmbeddingMatrix;
use crate::error::{validation, Result};
use crate::gmm::{assign, default_components, fit_gmm};
use crate::io::{metric, MetricReport, ReportMetadata};
use crate::metrics::isotropy_scores;
use crate::transform::{apply_tora, variance_scale_up, AlignmentStatus, SemanticVector, ToraConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum InterventionKind {
    /// Token spacing plus (optionally) residual alignment.
    Tora {
        config: ToraConfig,
        semantic: SemanticVector,
    },
    /// Variance scale-up to total variance `sigma²`.
    ScaleUp { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BlockSelection {
    #[default]
    All,
    /// 1-based block indices.
    Only(Vec<usize>),
}

impl BlockSelection {
    pub fn contains(&self, block: usize) -> bool {
        match self {
            BlockSelection::All => true,
            BlockSelection::Only(blocks) => blocks.contains(&block),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intervention {
    pub kind: InterventionKind,
    pub blocks: BlockSelection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub timesteps: usize,
    pub combine: AttentionCombine,
    /// GMM component count; `None` uses [`default_components`].
    pub clusters: Option<usize>,
    /// Seed for the per-block GMM fits.
    pub seed: u64,
    pub intervention: Option<Intervention>,
}

impl PipelineConfig {
    pub fn new(timesteps: usize, seed: u64) -> Self {
        Self {
            timesteps,
            combine: AttentionCombine::default(),
            clusters: None,
            seed,
            intervention: None,
        }
    }
}

/// What the intervention did before one block.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRecord {
    pub timestep: usize,
    pub block: usize,
    /// Principal dimension, for token spacing.
    pub k: Option<usize>,
    pub alignment: Option<AlignmentStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub report: MetricReport,
    /// Mean of the per-(timestep, block) maps.
    pub attention: AttentionMap,
    /// Text embedding each block consumed, after any intervention, in
    /// (timestep, block) order.
    pub consumed: Vec<BlockState>,
    pub transforms: Vec<TransformRecord>,
}

/// Runs `T` timesteps of `B` blocks. The text stream restarts from `e_init`
/// at every timestep; the latent stream carries over.
///
/// Metrics are recorded on the embedding each block consumes. Local
/// isotropy uses clusters fitted on that block's input before intervention,
/// so intervened and plain runs are scored against the same kind of grouping.
pub fn run_pipeline(
    e_init: &EmbeddingMatrix,
    x_init: &EmbeddingMatrix,
    weights: &ToyModelWeights,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    if config.timesteps == 0 {
        return Err(validation!("timestep count must be at least 1"));
    }
    if weights.blocks.is_empty() {
        return Err(validation!("model has no blocks"));
    }
    let d = weights.dim();
    if e_init.dim() != d || x_init.dim() != d {
        return Err(validation!(
            "text dim {} and latent dim {} must match model dim {d}",
            e_init.dim(),
            x_init.dim()
        ));
    }
    let tokens = e_init.tokens();
    let clusters = config.clusters.unwrap_or_else(|| default_components(tokens));

    let mut report = MetricReport::new(ReportMetadata::default());
    let mut sum = AttentionMap::zeros(tokens, x_init.tokens());
    let mut consumed = Vec::new();
    let mut transforms = Vec::new();
    let mut latent = x_init.as_matrix().clone();

    for t in 1..=config.timesteps {
        let mut text = e_init.as_matrix().clone();
        for (index, block_weights) in weights.blocks.iter().enumerate() {
            let b = index + 1;
            let before = EmbeddingMatrix::new(text)?;
            let labels = assign(&fit_gmm(&before, clusters, config.seed)?, &before)?.labels;

            let input = match &config.intervention {
                Some(iv) if iv.blocks.contains(b) => {
                    let (out, record) = intervene(&iv.kind, &before, t, b)?;
                    transforms.push(record);
                    out
                }
                _ => before,
            };

            let scores = isotropy_scores(&input, &labels)?;
            report.push(t, b, metric::EIGEN_SUM, scores.eigen_sum);
            report.push(t, b, metric::XI_LOCAL, scores.xi_local);
            report.push(t, b, metric::GLOBAL_ANISOTROPY, scores.global_anisotropy);
            report.push(t, b, metric::ISO_SCORE, scores.iso_score);

            let state = BlockState {
                text: input.into_matrix(),
                latent,
                block: b,
                timestep: t,
            };
            let (next, map) = joint_attention_block(&state, block_weights, config.combine)?;
            sum.text_to_text += map.text_to_text;
            sum.joint += map.joint;
            consumed.push(state);
            text = next.text;
            latent = next.latent;
        }
    }

    let count = (config.timesteps * weights.blocks.len()) as f64;
    let attention = AttentionMap {
        text_to_text: sum.text_to_text / count,
        joint: sum.joint / count,
    };
    Ok(PipelineRun {
        report,
        attention,
        consumed,
        transforms,
    })
}

fn intervene(
    kind: &InterventionKind,
    e: &EmbeddingMatrix,
    timestep: usize,
    block: usize,
) -> Result<(EmbeddingMatrix, TransformRecord)> {
    match kind {
        InterventionKind::Tora { config, semantic } => {
            let out = apply_tora(e, semantic, config)?;
            Ok((
                out.embedding,
                TransformRecord {
                    timestep,
                    block,
                    k: Some(out.k),
                    alignment: Some(out.alignment),
                },
            ))
        }
        InterventionKind::ScaleUp { sigma } => Ok((
            variance_scale_up(e, *sigma)?,
            TransformRecord {
                timestep,
                block,
                k: None,
                alignment: None,
            },
        )),
    }
}

/// Largest deviation of a row sum of `m` from 1.
pub fn max_row_sum_error(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max)
}
