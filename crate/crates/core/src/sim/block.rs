use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::weights::{BlockWeights, ModalityWeights};
use crate::error::{validation, Result, ToraError};

pub const LAYER_NORM_EPS: f64 = 1e-6;

/// How cross- and self-modal scores are combined per query row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionCombine {
    /// One softmax over the concatenated `[cross | self]` score row.
    #[default]
    Concat,
    /// Separate softmaxes over each block, outputs summed.
    Sum,
}

impl AttentionCombine {
    pub fn label(self) -> &'static str {
        match self {
            AttentionCombine::Concat => "concat",
            AttentionCombine::Sum => "sum",
        }
    }
}

impl FromStr for AttentionCombine {
    type Err = ToraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(AttentionCombine::Concat),
            "sum" => Ok(AttentionCombine::Sum),
            other => Err(ToraError::Configuration(format!(
                "unknown attention combination '{other}' (expected concat or sum)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    /// `V x d` text embeddings.
    pub text: DMatrix<f64>,
    /// `N x d` latent embeddings.
    pub latent: DMatrix<f64>,
    /// 1-based block index of the block that consumes this state.
    pub block: usize,
    /// 1-based timestep.
    pub timestep: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    /// `V x V` text self-attention, `softmax(Q_txt K_txtᵀ / √d)`.
    pub text_to_text: DMatrix<f64>,
    /// `V x (N + V)` text-query weights over `[latent keys | text keys]`.
    pub joint: DMatrix<f64>,
}

impl AttentionMap {
    pub fn zeros(tokens: usize, latents: usize) -> Self {
        Self {
            text_to_text: DMatrix::zeros(tokens, tokens),
            joint: DMatrix::zeros(tokens, latents + tokens),
        }
    }
}

/// Row-wise layer norm followed by `γ ⊙ · + β`.
pub fn ada_layer_norm(x: &DMatrix<f64>, gamma: &DVector<f64>, beta: &DVector<f64>) -> DMatrix<f64> {
    let d = x.ncols() as f64;
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean) * inv * gamma[j] + beta[j];
        }
    }
    out
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = scores.clone();
    for mut row in out.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let total = row.sum();
        row /= total;
    }
    out
}

struct Projected {
    q: DMatrix<f64>,
    k: DMatrix<f64>,
    v: DMatrix<f64>,
}

fn project(x: &DMatrix<f64>, w: &ModalityWeights) -> Projected {
    let h = ada_layer_norm(x, &w.gamma, &w.beta);
    Projected {
        q: &h * &w.w_q,
        k: &h * &w.w_k,
        v: &h * &w.w_v,
    }
}

/// Attention output for `own` queries over `[other | own]` keys and values,
/// plus the `[cross | self]` weight matrix.
fn attend(
    own: &Projected,
    other: &Projected,
    scale: f64,
    combine: AttentionCombine,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let cross = &own.q * other.k.transpose() * scale;
    let this = &own.q * own.k.transpose() * scale;
    let (n_other, n_own) = (cross.ncols(), this.ncols());
    let rows = cross.nrows();
    match combine {
        AttentionCombine::Concat => {
            let mut scores = DMatrix::zeros(rows, n_other + n_own);
            scores.columns_mut(0, n_other).copy_from(&cross);
            scores.columns_mut(n_other, n_own).copy_from(&this);
            let weights = softmax_rows(&scores);
            let out = weights.columns(0, n_other) * &other.v + weights.columns(n_other, n_own) * &own.v;
            (out, weights)
        }
        AttentionCombine::Sum => {
            let wc = softmax_rows(&cross);
            let ws = softmax_rows(&this);
            let out = &wc * &other.v + &ws * &own.v;
            let mut weights = DMatrix::zeros(rows, n_other + n_own);
            weights.columns_mut(0, n_other).copy_from(&(wc * 0.5));
            weights.columns_mut(n_other, n_own).copy_from(&(ws * 0.5));
            (out, weights)
        }
    }
}

/// One joint-attention block: AdaLN, per-modality projections, joint
/// attention and gated residual updates for both streams.
pub fn joint_attention_block(
    state: &BlockState,
    weights: &BlockWeights,
    combine: AttentionCombine,
) -> Result<(BlockState, AttentionMap)> {
    let d = state.text.ncols();
    if state.latent.ncols() != d || weights.text.dim() != d || weights.latent.dim() != d {
        return Err(validation!(
            "dimension mismatch: text {}, latent {}, weights {}",
            d,
            state.latent.ncols(),
            weights.text.dim()
        ));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let text = project(&state.text, &weights.text);
    let latent = project(&state.latent, &weights.latent);

    let (o_text, joint) = attend(&text, &latent, scale, combine);
    let (o_latent, _) = attend(&latent, &text, scale, combine);

    let next_text = &state.text + (o_text * &weights.text.w_out) * weights.text.gate;
    let next_latent = &state.latent + (o_latent * &weights.latent.w_out) * weights.latent.gate;
    let text_to_text = softmax_rows(&(&text.q * text.k.transpose() * scale));

    let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
    if !(finite(&next_text) && finite(&next_latent) && finite(&joint) && finite(&text_to_text)) {
        return Err(ToraError::NumericalFailure {
            timestep: state.timestep,
            block: state.block,
            detail: "non-finite value in joint attention".into(),
        });
    }
    Ok((
        BlockState {
            text: next_text,
            latent: next_latent,
            block: state.block + 1,
            timestep: state.timestep,
        },
        AttentionMap {
            text_to_text,
            joint,
        },
    ))
}
