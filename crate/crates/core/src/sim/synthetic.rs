use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding::EmbeddingMatrix;
use crate::error::{validation, Result};

/// Anisotropic Gaussian clusters.
///
/// Cluster centers sit at distance `center_norm` from the origin, at angle
/// `cone_angle` from the shared axis `(1, ..., 1)/√d`, each in an independent
/// random azimuthal direction. Tokens are assigned to clusters round-robin and
/// drawn as `center + spread * N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub tokens: usize,
    pub dim: usize,
    pub clusters: usize,
    /// Radians.
    pub cone_angle: f64,
    pub center_norm: f64,
    pub spread: f64,
}

impl SyntheticSpec {
    pub fn new(tokens: usize, dim: usize) -> Self {
        Self {
            tokens,
            dim,
            clusters: 2,
            cone_angle: 0.5,
            center_norm: 4.0,
            spread: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tokens < 2 || self.dim < 2 {
            return Err(validation!(
                "synthetic data needs at least 2 tokens and 2 dimensions"
            ));
        }
        if self.clusters == 0 || self.clusters > self.tokens {
            return Err(validation!(
                "cluster count {} outside [1, {}]",
                self.clusters,
                self.tokens
            ));
        }
        let finite = [self.cone_angle, self.center_norm, self.spread];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(validation!("generator parameters must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn axis(&self) -> DVector<f64> {
        DVector::from_element(self.dim, 1.0 / (self.dim as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub embedding: EmbeddingMatrix,
    /// Generating cluster of each token.
    pub labels: Vec<usize>,
    /// `clusters x d`.
    pub centers: DMatrix<f64>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = spec.axis();
    let (sin, cos) = spec.cone_angle.sin_cos();

    let mut centers = DMatrix::zeros(spec.clusters, spec.dim);
    for c in 0..spec.clusters {
        let mut azimuth = gaussian(&mut rng, spec.dim);
        let along = azimuth.dot(&axis);
        azimuth -= &axis * along;
        let center = (&axis * cos + azimuth.normalize() * sin) * spec.center_norm;
        centers.set_row(c, &center.transpose());
    }

    let labels: Vec<usize> = (0..spec.tokens).map(|i| i % spec.clusters).collect();
    let mut data = DMatrix::zeros(spec.tokens, spec.dim);
    for (i, &c) in labels.iter().enumerate() {
        let noise = gaussian(&mut rng, spec.dim) * spec.spread;
        data.set_row(i, &(centers.row(c) + noise.transpose()));
    }
    Ok(SyntheticSample {
        embedding: EmbeddingMatrix::new(data)?,
        labels,
        centers,
    })
}

/// Latent tokens: isotropic standard normal, from stream 1 of `seed`.
pub fn generate_latents(tokens: usize, dim: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if tokens == 0 || dim == 0 {
        return Err(validation!("latent matrix must be non-empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let values: Vec<f64> = (0..tokens * dim).map(|_| rng.sample(StandardNormal)).collect();
    EmbeddingMatrix::from_row_slice(tokens, dim, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::global_anisotropy;

    #[test]
    fn geometry() {
        let spec = SyntheticSpec::new(12, 16);
        let s = generate(&spec, 3).unwrap();
        assert_eq!((s.embedding.tokens(), s.embedding.dim()), (12, 16));
        for c in s.centers.row_iter() {
            let c = c.transpose();
            assert!((c.norm() - spec.center_norm).abs() < 1e-12);
            let angle = (c.dot(&spec.axis()) / c.norm()).acos();
            assert!((angle - spec.cone_angle).abs() < 1e-12);
        }
        assert_eq!(&s.labels[..4], &[0, 1, 0, 1]);
        assert!(global_anisotropy(&s.embedding).unwrap() > 0.3);
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::new(8, 8);
        assert_eq!(generate(&spec, 1).unwrap(), generate(&spec, 1).unwrap());
        assert_ne!(generate(&spec, 1).unwrap(), generate(&spec, 2).unwrap());
        assert_eq!(generate_latents(4, 8, 0).unwrap(), generate_latents(4, 8, 0).unwrap());
    }

    #[test]
    fn rejects_bad_spec() {
        let mut spec = SyntheticSpec::new(4, 4);
        spec.clusters = 5;
        assert!(generate(&spec, 0).is_err());
        assert!(generate(&SyntheticSpec::new(1, 4), 0).is_err());
    }
}
