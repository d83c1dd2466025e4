//! Shared-edge histograms and Kullback-Leibler divergence.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// A histogram with explicit bin edges and an add-per-bin smoothing mass
/// applied when the counts are normalized into frequencies. Bin `b` covers
/// `[edges[b], edges[b+1])`; values outside the range clamp into the first
/// or last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub smoothing: f64,
}

impl Histogram {
    pub fn from_values(values: &[f64], edges: Vec<f64>, smoothing: f64) -> Result<Self, EvalError> {
        if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::BadEdges);
        }
        let mut counts = vec![0u64; edges.len() - 1];
        for &v in values {
            counts[bin_of(&edges, v)] += 1;
        }
        Ok(Self {
            edges,
            counts,
            smoothing,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Smoothed, normalized per-bin frequencies.
    pub fn smoothed_frequencies(&self) -> Result<Vec<f64>, EvalError> {
        let bins = self.counts.len() as f64;
        let denom = self.total() as f64 + self.smoothing * bins;
        if denom <= 0.0 {
            return Err(EvalError::EmptyHistogram);
        }
        Ok(self
            .counts
            .iter()
            .map(|&c| (c as f64 + self.smoothing) / denom)
            .collect())
    }
}

fn bin_of(edges: &[f64], value: f64) -> usize {
    if value < edges[0] {
        return 0;
    }
    let last = edges.len() - 2;
    for b in 0..=last {
        if value < edges[b + 1] {
            return b;
        }
    }
    last
}

/// KL(p ‖ q) in nats over the shared bins. Zero-probability p bins
/// contribute nothing; a zero-probability q bin under positive p mass
/// yields +∞, which per-bin smoothing prevents.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<f64, EvalError> {
    if p.edges != q.edges {
        return Err(EvalError::MismatchedEdges);
    }
    let fp = p.smoothed_frequencies()?;
    let fq = q.smoothed_frequencies()?;
    let mut kl = 0.0;
    for (a, b) in fp.iter().zip(fq.iter()) {
        if *a == 0.0 {
            continue;
        }
        if *b == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += a * (a / b).ln();
    }
    // Numerical round-off can leave a tiny negative residue when p == q.
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: Vec<u64>, smoothing: f64) -> Histogram {
        let edges = (0..=counts.len()).map(|i| i as f64).collect();
        Histogram {
            edges,
            counts,
            smoothing,
        }
    }

    #[test]
    fn identical_histograms_have_zero_divergence() {
        let p = hist(vec![3, 5, 2], 0.5);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    // Hand computation with smoothing disabled:
    // P = (1/2, 1/2), Q = (1/4, 3/4):
    // KL = 0.5 ln 2 + 0.5 ln(2/3) = 0.14384103622589046 nats.
    #[test]
    fn two_bin_hand_case() {
        let p = hist(vec![2, 2], 0.0);
        let q = hist(vec![1, 3], 0.0);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!((kl - 0.14384103622589046).abs() < 1e-12, "kl {kl}");
    }

    #[test]
    fn disjoint_support_is_finite_with_smoothing() {
        let p = hist(vec![10, 0], 0.5);
        let q = hist(vec![0, 10], 0.5);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!(kl.is_finite() && kl > 1.0, "kl {kl}");
        // Without smoothing the same pair diverges.
        let p0 = hist(vec![10, 0], 0.0);
        let q0 = hist(vec![0, 10], 0.0);
        assert!(kl_divergence(&p0, &q0).unwrap().is_infinite());
    }

    #[test]
    fn divergence_is_nonnegative_and_asymmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let bins = rng.gen_range(2..6);
            let p = hist((0..bins).map(|_| rng.gen_range(0..20)).collect(), 0.5);
            let q = hist((0..bins).map(|_| rng.gen_range(0..20)).collect(), 0.5);
            let kl = kl_divergence(&p, &q).unwrap();
            assert!(kl >= 0.0 && kl.is_finite());
        }
        let p = hist(vec![9, 1], 0.5);
        let q = hist(vec![5, 5], 0.5);
        assert_ne!(
            kl_divergence(&p, &q).unwrap(),
            kl_divergence(&q, &p).unwrap()
        );
    }

    #[test]
    fn mismatched_edges_rejected() {
        let p = hist(vec![1, 2], 0.5);
        let q = Histogram {
            edges: vec![0.0, 2.0, 4.0],
            counts: vec![1, 2],
            smoothing: 0.5,
        };
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(EvalError::MismatchedEdges)
        ));
    }

    #[test]
    fn values_clamp_into_terminal_bins() {
        let h = Histogram::from_values(&[-5.0, 0.5, 99.0], vec![0.0, 1.0, 2.0], 0.0).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
    }

    #[test]
    fn empty_without_smoothing_is_an_error() {
        let h = hist(vec![0, 0], 0.0);
        assert!(matches!(
            h.smoothed_frequencies(),
            Err(EvalError::EmptyHistogram)
        ));
    }
}
