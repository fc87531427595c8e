use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{validation, Result};

/// Projections and modulation for one modality in one block.
///
/// Row-vector convention throughout: `Q = h W_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityWeights {
    pub w_q: DMatrix<f64>,
    pub w_k: DMatrix<f64>,
    pub w_v: DMatrix<f64>,
    pub w_out: DMatrix<f64>,
    /// AdaLN scale.
    pub gamma: DVector<f64>,
    /// AdaLN shift.
    pub beta: DVector<f64>,
    /// Residual gate.
    pub gate: f64,
}

impl ModalityWeights {
    /// Identity projections, unit scale, zero shift, unit gate.
    pub fn identity(dim: usize) -> Self {
        Self {
            w_q: DMatrix::identity(dim, dim),
            w_k: DMatrix::identity(dim, dim),
            w_v: DMatrix::identity(dim, dim),
            w_out: DMatrix::identity(dim, dim),
            gamma: DVector::from_element(dim, 1.0),
            beta: DVector::zeros(dim),
            gate: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    fn sample(rng: &mut ChaCha8Rng, dim: usize) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let matrix = |rng: &mut ChaCha8Rng| {
            // filled row by row so the draw order does not depend on storage
            let values: Vec<f64> = (0..dim * dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            DMatrix::from_row_slice(dim, dim, &values)
        };
        let w_q = matrix(rng);
        let w_k = matrix(rng);
        let w_v = matrix(rng);
        let w_out = matrix(rng);
        let gamma = DVector::from_fn(dim, |_, _| 1.0 + scale * rng.sample::<f64, _>(StandardNormal));
        let beta = DVector::from_fn(dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        Self {
            w_q,
            w_k,
            w_v,
            w_out,
            gamma,
            beta,
            gate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub text: ModalityWeights,
    pub latent: ModalityWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModelWeights {
    pub blocks: Vec<BlockWeights>,
    /// Seed the weights were drawn from, `None` for hand-built weights.
    pub seed: Option<u64>,
}

impl ToyModelWeights {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].text.dim()
    }

    /// Sets every output projection to zero, turning each block into the identity.
    pub fn zero_output(mut self) -> Self {
        for b in &mut self.blocks {
            b.text.w_out.fill(0.0);
            b.latent.w_out.fill(0.0);
        }
        self
    }
}

/// Seeded random weights.
///
/// Each (block, modality) pair draws from its own ChaCha8 stream
/// `2 + 2 * block + modality` (text 0, latent 1) of the generator seeded with
/// `seed`, so adding blocks never changes earlier ones. Streams 0 and 1 are
/// left to the synthetic text and latent inputs. Projections are
/// `N(0, 1/d)`, AdaLN scales `1 + N(0, 1/d)`, shifts `N(0, 1/d)`, gates 1.
pub fn init_weights(seed: u64, blocks: usize, dim: usize) -> Result<ToyModelWeights> {
    if blocks == 0 {
        return Err(validation!("block count must be at least 1"));
    }
    if dim < 2 {
        return Err(validation!("dimension must be at least 2, got {dim}"));
    }
    let stream = |b: usize, modality: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 + 2 * b as u64 + modality);
        rng
    };
    let blocks = (0..blocks)
        .map(|b| BlockWeights {
            text: ModalityWeights::sample(&mut stream(b, 0), dim),
            latent: ModalityWeights::sample(&mut stream(b, 1), dim),
        })
        .collect();
    Ok(ToyModelWeights {
        blocks,
        seed: Some(seed),
    })
}
