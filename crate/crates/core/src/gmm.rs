//! Diagonal-covariance Gaussian mixtures fitted by expectation-maximization.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingMatrix;
use crate::error::{degenerate, validation, Result};

pub const VARIANCE_FLOOR: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 200;
/// EM stops once the log-likelihood improves by less than this.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;
pub const RESTARTS: u64 = 3;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    /// Length `C`, sums to 1.
    pub weights: DVector<f64>,
    /// `C x d`.
    pub means: DMatrix<f64>,
    /// `C x d`, every entry at least [`VARIANCE_FLOOR`].
    pub variances: DMatrix<f64>,
    /// Total log-likelihood of the training data under the final parameters.
    pub log_likelihood: f64,
    /// Log-likelihood after initialization and after every EM iteration.
    pub trace: Vec<f64>,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    /// `V x C`, row-stochastic.
    pub responsibilities: DMatrix<f64>,
}

/// `max(2, ⌊V/8⌋)`, capped at `V`.
pub fn default_components(tokens: usize) -> usize {
    (tokens / 8).max(2).min(tokens)
}

/// Fits a `C`-component mixture, keeping the best of [`RESTARTS`] runs seeded
/// `seed, seed + 1, ...`.
pub fn fit_gmm(e: &EmbeddingMatrix, components: usize, seed: u64) -> Result<GmmModel> {
    if components == 0 {
        return Err(validation!("component count must be at least 1"));
    }
    if e.tokens() < components {
        return Err(validation!(
            "{} tokens cannot support {components} components",
            e.tokens()
        ));
    }
    let data = e.as_matrix();
    let first = data.row(0);
    if data.row_iter().all(|r| r == first) {
        return Err(degenerate!("all tokens are identical"));
    }

    let mut best: Option<GmmModel> = None;
    for restart in 0..RESTARTS {
        let model = fit_once(data, components, seed.wrapping_add(restart));
        if best
            .as_ref()
            .is_none_or(|b| model.log_likelihood > b.log_likelihood)
        {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn fit_once(data: &DMatrix<f64>, components: usize, seed: u64) -> GmmModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (tokens, dim) = data.shape();

    let seeds = kmeans_plus_plus(data, components, &mut rng);
    let (mut means, labels) = lloyd(data, &seeds);
    let mut weights = DVector::from_fn(components, |c, _| {
        labels.iter().filter(|&&l| l == c).count() as f64 / tokens as f64
    });
    // shared global variances keep small k-means clusters from starting collapsed
    let global = column_variances(data);
    let mut variances = DMatrix::from_fn(components, dim, |_, j| global[j]);

    let mut log_resp = DMatrix::zeros(tokens, components);
    let mut ll = e_step(data, &weights, &means, &variances, &mut log_resp);
    let mut trace = vec![ll];

    for _ in 0..MAX_ITERATIONS {
        m_step(data, &log_resp, &mut weights, &mut means, &mut variances);
        let next = e_step(data, &weights, &means, &variances, &mut log_resp);
        trace.push(next);
        let improvement = next - ll;
        ll = next;
        if improvement < CONVERGENCE_TOLERANCE {
            break;
        }
    }
    GmmModel {
        weights,
        means,
        variances,
        log_likelihood: ll,
        trace,
    }
}

/// Seeded k-means++: first center uniform, later ones drawn with probability
/// proportional to squared distance to the nearest chosen center.
fn kmeans_plus_plus(data: &DMatrix<f64>, components: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let tokens = data.nrows();
    let mut centers = vec![rng.random_range(0..tokens)];
    let mut nearest: Vec<f64> = (0..tokens)
        .map(|i| (data.row(i) - data.row(centers[0])).norm_squared())
        .collect();
    while centers.len() < components {
        let next = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a center already
            Err(_) => rng.random_range(0..tokens),
        };
        centers.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min((data.row(i) - data.row(next)).norm_squared());
        }
    }
    centers
}

fn nearest(point: DMatrixView<'_, f64>, centers: &DMatrix<f64>) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (c, center) in centers.row_iter().enumerate() {
        let dist = (point - center).norm_squared();
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    best
}

/// Lloyd iterations from the seeded centers until assignments settle (at
/// most [`MAX_ITERATIONS`] rounds). Ties go to the lowest center; a center
/// that loses all its points stays where it was.
fn lloyd(data: &DMatrix<f64>, seeds: &[usize]) -> (DMatrix<f64>, Vec<usize>) {
    let (tokens, dim) = data.shape();
    let mut centers = DMatrix::from_fn(seeds.len(), dim, |c, j| data[(seeds[c], j)]);
    let mut labels = vec![usize::MAX; tokens];
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<usize> = (0..tokens)
            .map(|i| nearest(data.rows(i, 1), &centers))
            .collect();
        if next == labels {
            break;
        }
        labels = next;
        for c in 0..seeds.len() {
            let members: Vec<usize> = (0..tokens).filter(|&i| labels[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let mut sum = DMatrix::zeros(1, dim);
            for &i in &members {
                sum += data.row(i);
            }
            centers.set_row(c, &(sum.row(0) / members.len() as f64));
        }
    }
    (centers, labels)
}

fn column_variances(data: &DMatrix<f64>) -> DVector<f64> {
    let n = data.nrows() as f64;
    DVector::from_iterator(
        data.ncols(),
        data.column_iter().map(|col| {
            let mean = col.mean();
            (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).max(VARIANCE_FLOOR)
        }),
    )
}

fn log_density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((xi, mi), vi) in x.iter().zip(mean).zip(var) {
        acc += LN_2PI + vi.ln() + (xi - mi).powi(2) / vi;
    }
    -0.5 * acc
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Fills `log_resp` with normalized log responsibilities and returns the
/// total log-likelihood.
fn e_step(
    data: &DMatrix<f64>,
    weights: &DVector<f64>,
    means: &DMatrix<f64>,
    variances: &DMatrix<f64>,
    log_resp: &mut DMatrix<f64>,
) -> f64 {
    let components = weights.len();
    // row-major copies so each density works on contiguous slices
    let mean_rows: Vec<Vec<f64>> = means.row_iter().map(|r| r.iter().copied().collect()).collect();
    let var_rows: Vec<Vec<f64>> = variances
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    let mut joint = vec![0.0; components];
    let mut total = 0.0;
    for i in 0..data.nrows() {
        let x: Vec<f64> = data.row(i).iter().copied().collect();
        for c in 0..components {
            joint[c] = weights[c].ln() + log_density(&x, &mean_rows[c], &var_rows[c]);
        }
        let norm = log_sum_exp(&joint);
        for c in 0..components {
            log_resp[(i, c)] = joint[c] - norm;
        }
        total += norm;
    }
    total
}

fn m_step(
    data: &DMatrix<f64>,
    log_resp: &DMatrix<f64>,
    weights: &mut DVector<f64>,
    means: &mut DMatrix<f64>,
    variances: &mut DMatrix<f64>,
) {
    let (tokens, dim) = data.shape();
    let resp = log_resp.map(f64::exp);
    for c in 0..weights.len() {
        let col = resp.column(c);
        let nk: f64 = col.sum();
        weights[c] = nk / tokens as f64;
        // an empty component keeps its old parameters; with zero weight it
        // contributes nothing to the likelihood
        if nk <= f64::MIN_POSITIVE * tokens as f64 {
            continue;
        }
        for j in 0..dim {
            let x = data.column(j);
            let mean = col.dot(&x) / nk;
            let var = col
                .iter()
                .zip(x.iter())
                .map(|(r, v)| r * (v - mean).powi(2))
                .sum::<f64>()
                / nk;
            means[(c, j)] = mean;
            variances[(c, j)] = var.max(VARIANCE_FLOOR);
        }
    }
    let total = weights.sum();
    *weights /= total;
}

/// Responsibilities of every token under `model`; labels are the argmax with
/// ties going to the lowest component.
pub fn assign(model: &GmmModel, e: &EmbeddingMatrix) -> Result<ClusterAssignment> {
    if e.dim() != model.dim() {
        return Err(validation!(
            "model has dimension {}, embeddings have {}",
            model.dim(),
            e.dim()
        ));
    }
    let data = e.as_matrix();
    let mut log_resp = DMatrix::zeros(data.nrows(), model.components());
    e_step(
        data,
        &model.weights,
        &model.means,
        &model.variances,
        &mut log_resp,
    );
    let responsibilities = log_resp.map(f64::exp);
    let labels = responsibilities
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    Ok(ClusterAssignment {
        labels,
        responsibilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn blobs(centers: &[Vec<f64>], per: usize, spread: f64, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..per {
                rows.push(
                    c.iter()
                        .map(|m| m + spread * rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                );
            }
        }
        EmbeddingMatrix::from_rows(&rows).unwrap()
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn single_component() {
        let e = blobs(&[vec![1.0, -2.0, 0.5]], 10, 1.0, 4);
        let model = fit_gmm(&e, 1, 0).unwrap();
        assert!((model.weights[0] - 1.0).abs() < 1e-15);
        let mean = e.mean_row();
        for j in 0..3 {
            assert!((model.means[(0, j)] - mean[j]).abs() < 1e-12);
        }
        let a = assign(&model, &e).unwrap();
        assert!(a.responsibilities.iter().all(|&r| r == 1.0));
        assert!(a.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn separated_blobs_recovered() {
        let centers = vec![vec![0.0; 4], vec![20.0, 0.0, 0.0, 0.0]];
        for seed in 0..5 {
            let e = blobs(&centers, 12, 1.0, 100 + seed);
            let model = fit_gmm(&e, 2, seed).unwrap();
            let labels = assign(&model, &e).unwrap().labels;
            // oracle: nearest true center
            let truth: Vec<usize> = (0..e.tokens())
                .map(|i| {
                    let r = e.row(i);
                    let d0 = (0..4).map(|j| (r[j] - centers[0][j]).powi(2)).sum::<f64>();
                    let d1 = (0..4).map(|j| (r[j] - centers[1][j]).powi(2)).sum::<f64>();
                    usize::from(d1 < d0)
                })
                .collect();
            assert!(same_partition(&labels, &truth), "seed {seed}");
        }
    }

    #[test]
    fn log_likelihood_monotone() {
        let e = blobs(&[vec![0.0; 6], vec![3.0; 6], vec![-2.0, 1.0, 0.0, 0.0, 4.0, 1.0]], 9, 1.5, 8);
        for c in 1..=4 {
            let model = fit_gmm(&e, c, 42).unwrap();
            assert!(model.trace.len() >= 2);
            for w in model.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
            }
            assert_eq!(*model.trace.last().unwrap(), model.log_likelihood);
        }
    }

    #[test]
    fn invariants_hold() {
        let e = blobs(&[vec![0.0; 5], vec![1.0; 5]], 8, 0.5, 3);
        let model = fit_gmm(&e, 3, 7).unwrap();
        assert!((model.weights.sum() - 1.0).abs() < 1e-10);
        assert!(model.weights.iter().all(|&w| w >= 0.0));
        assert!(model.variances.iter().all(|&v| v >= VARIANCE_FLOOR));
        let a = assign(&model, &e).unwrap();
        for (i, row) in a.responsibilities.row_iter().enumerate() {
            assert!((row.sum() - 1.0).abs() < 1e-10);
            assert_eq!(row[a.labels[i]], row.max());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let e = blobs(&[vec![0.0; 3], vec![2.0; 3]], 10, 1.0, 5);
        assert_eq!(fit_gmm(&e, 2, 9).unwrap(), fit_gmm(&e, 2, 9).unwrap());
    }

    #[test]
    fn errors() {
        let e = blobs(&[vec![0.0; 3]], 3, 1.0, 1);
        assert!(fit_gmm(&e, 4, 0).is_err());
        assert!(fit_gmm(&e, 0, 0).is_err());
        let same = EmbeddingMatrix::from_rows(&vec![vec![1.0, 2.0]; 5]).unwrap();
        assert!(matches!(
            fit_gmm(&same, 2, 0),
            Err(crate::ToraError::DegenerateInput(_))
        ));
        let model = fit_gmm(&e, 1, 0).unwrap();
        let wrong = blobs(&[vec![0.0; 2]], 3, 1.0, 1);
        assert!(assign(&model, &wrong).is_err());
    }

    #[test]
    fn dominant_component_label() {
        let model = GmmModel {
            weights: DVector::from_vec(vec![0.9, 0.1]),
            means: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 5.0, 5.0]),
            variances: DMatrix::from_element(2, 2, 1.0),
            log_likelihood: 0.0,
            trace: vec![],
        };
        let e = EmbeddingMatrix::from_rows(&[vec![0.0, 0.0], vec![5.0, 5.0]]).unwrap();
        assert_eq!(assign(&model, &e).unwrap().labels, vec![0, 1]);
    }

    #[test]
    fn random_model_rows_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let c = 4;
        let d = 30;
        let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let model = GmmModel {
            weights: DVector::from_iterator(c, raw.iter().map(|w| w / total)),
            means: DMatrix::from_fn(c, d, |_, _| rng.random_range(-50.0..50.0)),
            variances: DMatrix::from_fn(c, d, |_, _| rng.random_range(1e-6..2.0)),
            log_likelihood: 0.0,
            trace: vec![],
        };
        let points = blobs(&[vec![0.0; d]], 20, 30.0, 78);
        let a = assign(&model, &points).unwrap();
        for row in a.responsibilities.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn default_count() {
        assert_eq!(default_components(8), 2);
        assert_eq!(default_components(32), 4);
        assert_eq!(default_components(1), 1);
    }
}
