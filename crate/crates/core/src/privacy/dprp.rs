//! Random-projection embedding perturbation.
//!
//! The mechanism privatises an n×d matrix of unit-bounded embeddings in
//! four steps: add Gaussian noise to the embeddings, add symmetric Gaussian
//! noise to their covariance, take the SVD of the noisy covariance, and
//! project the noisy embeddings onto the span of its top-k right singular
//! vectors via the Moore-Penrose pseudoinverse. The privacy budget is split
//! between the two noise draws by the allocation fraction; both additions
//! use sensitivity 1, which unit-norm row clipping guarantees for the
//! embeddings and for the covariance in Frobenius norm.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::budget::{gaussian_sigma, split_budget, PrivacyBudget};
use super::matrix::{add_gaussian_noise, EmbeddingMatrix};
use super::PrivacyError;

/// Knobs of the perturbation mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DprpParams {
    /// Fraction of the dimension kept by the projection, k = ⌈fraction·d⌉.
    pub rank_fraction: f64,
    /// Share of the budget spent on the embedding noise; the remainder
    /// covers the covariance noise.
    pub allocation: f64,
}

impl Default for DprpParams {
    fn default() -> Self {
        Self {
            rank_fraction: 0.6,
            allocation: 0.85,
        }
    }
}

/// Tolerance on the unit-norm precondition check.
const CLIP_TOLERANCE: f64 = 1e-9;

/// Relative singular-value cutoff for the pseudoinverse.
const PINV_CUTOFF: f64 = 1e-10;

fn symmetric_noise(d: usize, sigma: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut noise = DMatrix::zeros(d, d);
    if sigma == 0.0 {
        return noise;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated by caller");
    for i in 0..d {
        for j in i..d {
            let v = normal.sample(rng);
            noise[(i, j)] = v;
            noise[(j, i)] = v;
        }
    }
    noise
}

/// Top-k right singular vectors of `m`, as the k×d matrix V_kᵀ, ordered by
/// descending singular value.
fn top_k_right_singular(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });
    let mut out = DMatrix::zeros(k, v_t.ncols());
    for (row, &idx) in order.iter().take(k).enumerate() {
        out.set_row(row, &v_t.row(idx));
    }
    out
}

/// Perturbs clipped embeddings under the given budget. With the unbounded
/// budget and `rank_fraction = 1` the output equals the input up to
/// numerical error.
pub fn dprp_perturb(
    embeddings: &EmbeddingMatrix,
    budget: PrivacyBudget,
    params: DprpParams,
    rng: &mut impl Rng,
) -> Result<EmbeddingMatrix, PrivacyError> {
    if embeddings.dim() == 0 {
        return Err(PrivacyError::EmptyMatrix);
    }
    if !(params.rank_fraction > 0.0 && params.rank_fraction <= 1.0) {
        return Err(PrivacyError::RankFractionOutOfRange(params.rank_fraction));
    }
    for i in 0..embeddings.rows() {
        let norm = embeddings.row_norm(i);
        if norm > 1.0 + CLIP_TOLERANCE {
            return Err(PrivacyError::UnclippedRow { row: i, norm });
        }
    }

    let (noise_budget, cov_budget) = split_budget(budget, params.allocation)?;
    let sigma1 = gaussian_sigma(noise_budget, 1.0)?.sigma;
    let sigma2 = gaussian_sigma(cov_budget, 1.0)?.sigma;

    let noised = add_gaussian_noise(embeddings, sigma1, rng);

    let d = embeddings.dim();
    let e = embeddings.to_dmatrix();
    let noisy_cov = e.transpose() * &e + symmetric_noise(d, sigma2, rng);

    let k = ((params.rank_fraction * d as f64).ceil() as usize).clamp(1, d);
    let v_k_t = top_k_right_singular(&noisy_cov, k);

    // Projection E' (V_kᵀ)⁺ V_kᵀ. The pseudoinverse cutoff is relative to
    // the largest singular value.
    let svd = v_k_t.clone().svd(true, true);
    let sigma_max = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let pinv = svd
        .pseudo_inverse(PINV_CUTOFF * sigma_max.max(f64::MIN_POSITIVE))
        .expect("pseudoinverse of a finite matrix");
    let projection = pinv * &v_k_t;

    let out = noised.to_dmatrix() * projection;
    Ok(EmbeddingMatrix::from_dmatrix(&out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::matrix::clip_rows;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_clipped(rows: usize, dim: usize, rng: &mut impl Rng) -> EmbeddingMatrix {
        let values: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        clip_rows(&EmbeddingMatrix::from_values(rows, dim, values).unwrap(), 1.0)
    }

    #[test]
    fn zero_noise_full_rank_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let e = random_clipped(6, 5, &mut rng);
        let out = dprp_perturb(
            &e,
            PrivacyBudget::unbounded(),
            DprpParams {
                rank_fraction: 1.0,
                allocation: 0.85,
            },
            &mut rng,
        )
        .unwrap();
        let rel = out.frobenius_distance(&e) / e.frobenius_norm();
        assert!(rel < 1e-9, "relative error {rel}");
    }

    #[test]
    fn rank_one_matrix_recovered_at_k_one() {
        // E = u vᵀ for u = (0.2, 0.3, 0.1), v = (0.5, 0.5, 0.5, 0.5).
        // Exact SVD by hand: the only right singular direction is v/‖v‖
        // (‖v‖ = 1), so the k=1 projection is onto v and E is recovered.
        let u = [0.2, 0.3, 0.1];
        let v = [0.5, 0.5, 0.5, 0.5];
        let rows: Vec<Vec<f64>> = u
            .iter()
            .map(|&ui| v.iter().map(|&vj| ui * vj).collect())
            .collect();
        let e = EmbeddingMatrix::from_rows(&rows).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let out = dprp_perturb(
            &e,
            PrivacyBudget::unbounded(),
            DprpParams {
                rank_fraction: 0.25,
                allocation: 0.85,
            },
            &mut rng,
        )
        .unwrap();
        let rel = out.frobenius_distance(&e) / e.frobenius_norm();
        assert!(rel < 1e-9, "relative error {rel}");
    }

    #[test]
    fn rank_fraction_bounds_output_rank() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let e = random_clipped(20, 10, &mut rng);
        let budget = PrivacyBudget::new(2.0, 1e-5).unwrap();
        let out = dprp_perturb(&e, budget, DprpParams::default(), &mut rng).unwrap();
        let svd = out.to_dmatrix().svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let sigma_max = sv[0];
        for s in &sv[6..] {
            assert!(*s < 1e-8 * sigma_max, "singular value {s} above rank cutoff");
        }
    }

    #[test]
    fn projection_is_idempotent() {
        // P = (V_kᵀ)⁺ V_kᵀ applied twice equals P applied once.
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let e = random_clipped(8, 6, &mut rng);
        let cov = e.to_dmatrix().transpose() * e.to_dmatrix();
        let noisy = cov + symmetric_noise(6, 0.5, &mut rng);
        let v_k_t = top_k_right_singular(&noisy, 4);
        let svd = v_k_t.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let pinv = svd.pseudo_inverse(PINV_CUTOFF * smax).unwrap();
        let p = pinv * &v_k_t;
        let pp = &p * &p;
        let diff = (&pp - &p).norm();
        assert!(diff < 1e-9, "projector not idempotent: {diff}");
    }

    #[test]
    fn unclipped_input_rejected() {
        let e = EmbeddingMatrix::from_rows(&[vec![2.0, 0.0]]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let err = dprp_perturb(
            &e,
            PrivacyBudget::unbounded(),
            DprpParams::default(),
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, PrivacyError::UnclippedRow { row: 0, .. }));
    }

    #[test]
    fn noise_magnitude_matches_calibration() {
        // d = 1 with full rank keeps the projection trivial, so the output
        // is exactly the noised input and its deviation is N(0, σ1²).
        let budget = PrivacyBudget::new(1.0, 1e-5).unwrap();
        let params = DprpParams {
            rank_fraction: 1.0,
            allocation: 0.85,
        };
        let (noise_budget, _) = split_budget(budget, params.allocation).unwrap();
        let sigma1 = gaussian_sigma(noise_budget, 1.0).unwrap().sigma;
        let e = EmbeddingMatrix::from_rows(&[vec![0.5]]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let reps = 10_000;
        let mut sum_sq = 0.0;
        for _ in 0..reps {
            let out = dprp_perturb(&e, budget, params, &mut rng).unwrap();
            let dev = out.values()[0] - 0.5;
            sum_sq += dev * dev;
        }
        let empirical = (sum_sq / reps as f64).sqrt();
        let rel = (empirical - sigma1).abs() / sigma1;
        assert!(rel < 0.03, "empirical sigma {empirical} vs {sigma1}");
    }
}
