//! Bradley-Terry preference model fitted by minorization-maximization.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Pairwise win counts: `wins[i][j]` is how often item `i` beat item `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparisons {
    pub items: Vec<String>,
    pub wins: Vec<Vec<u64>>,
}

impl PairwiseComparisons {
    pub fn new(items: Vec<String>, wins: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let k = items.len();
        if wins.len() != k
            || wins.iter().any(|row| row.len() != k)
            || (0..k).any(|i| wins[i][i] != 0)
        {
            return Err(EvalError::BadWinMatrix);
        }
        Ok(Self { items, wins })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Fitted strengths (normalized to sum 1) and the implied win-probability
/// matrix `P[i][j] = s_i / (s_i + s_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtResult {
    pub strengths: Vec<f64>,
    pub win_prob: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Log-likelihood after each iteration; non-decreasing by the MM
    /// construction.
    pub log_likelihood_trace: Vec<f64>,
}

fn log_likelihood(wins: &[Vec<f64>], strengths: &[f64]) -> f64 {
    let k = strengths.len();
    let mut ll = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i == j || wins[i][j] == 0.0 {
                continue;
            }
            ll += wins[i][j] * (strengths[i] / (strengths[i] + strengths[j])).ln();
        }
    }
    ll
}

fn connected(wins: &[Vec<f64>]) -> bool {
    let k = wins.len();
    if k <= 1 {
        return true;
    }
    let mut seen = vec![false; k];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if !seen[j] && (wins[i][j] + wins[j][i]) > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub const DEFAULT_BT_TOL: f64 = 1e-8;
pub const DEFAULT_BT_MAX_ITER: usize = 10_000;
pub const DEFAULT_BT_PSEUDO: f64 = 0.1;

/// Maximum-likelihood strengths via the MM update
/// `s_i <- W_i / sum_{j != i} n_ij / (s_i + s_j)`, renormalized each
/// iteration, stopping when the largest strength change falls below `tol`.
/// `pseudo` is added to every ordered pair before fitting; with
/// `pseudo = 0` the comparison graph must be connected.
pub fn bt_fit(
    pc: &PairwiseComparisons,
    tol: f64,
    max_iter: usize,
    pseudo: f64,
) -> Result<BtResult, EvalError> {
    if tol < 0.0 || pseudo < 0.0 || !tol.is_finite() || !pseudo.is_finite() {
        return Err(EvalError::BadBtParams);
    }
    let k = pc.len();
    if k == 0 {
        return Err(EvalError::BadWinMatrix);
    }
    // Effective counts with the pseudo-count applied off-diagonal.
    let wins: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        pc.wins[i][j] as f64 + pseudo
                    }
                })
                .collect()
        })
        .collect();
    if !connected(&wins) {
        return Err(EvalError::DisconnectedGraph);
    }

    let mut strengths = vec![1.0 / k as f64; k];
    let mut trace = Vec::new();
    let mut iterations = 0;
    if k > 1 {
        for iter in 0..max_iter {
            iterations = iter + 1;
            let mut next = vec![0.0; k];
            for i in 0..k {
                let total_wins: f64 = (0..k).filter(|&j| j != i).map(|j| wins[i][j]).sum();
                let denom: f64 = (0..k)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let matches = wins[i][j] + wins[j][i];
                        matches / (strengths[i] + strengths[j])
                    })
                    .sum();
                next[i] = if denom > 0.0 { total_wins / denom } else { 0.0 };
            }
            let sum: f64 = next.iter().sum();
            if sum > 0.0 {
                for s in &mut next {
                    *s /= sum;
                }
            }
            let max_delta = strengths
                .iter()
                .zip(next.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            strengths = next;
            trace.push(log_likelihood(&wins, &strengths));
            if max_delta < tol {
                break;
            }
        }
    }

    // P[j][i] is computed as the complement so the pair sums to 1 exactly.
    let mut win_prob = vec![vec![0.5; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let denom = strengths[i] + strengths[j];
            let p = if denom == 0.0 {
                0.5
            } else {
                strengths[i] / denom
            };
            win_prob[i][j] = p;
            win_prob[j][i] = 1.0 - p;
        }
    }

    Ok(BtResult {
        strengths,
        win_prob,
        iterations,
        log_likelihood_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn pc(wins: Vec<Vec<u64>>) -> PairwiseComparisons {
        let items = (0..wins.len()).map(|i| format!("m{i}")).collect();
        PairwiseComparisons::new(items, wins).unwrap()
    }

    #[test]
    fn symmetric_record_gives_even_strengths() {
        let result = bt_fit(&pc(vec![vec![0, 5], vec![5, 0]]), 1e-10, 1000, 0.0).unwrap();
        assert!((result.strengths[0] - 0.5).abs() < 1e-9);
        assert!((result.win_prob[0][1] - 0.5).abs() < 1e-9);
    }

    // Two-player closed form: the MLE satisfies s_A / s_B = w_AB / w_BA,
    // so 3-1 wins give s = (0.75, 0.25) and P(A beats B) = 0.75.
    #[test]
    fn two_player_closed_form() {
        let result = bt_fit(&pc(vec![vec![0, 3], vec![1, 0]]), 1e-12, 1000, 0.0).unwrap();
        assert!((result.strengths[0] - 0.75).abs() < 1e-9);
        assert!((result.strengths[1] - 0.25).abs() < 1e-9);
        assert!((result.win_prob[0][1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn win_prob_rows_complement() {
        let result = bt_fit(
            &pc(vec![vec![0, 7, 2], vec![3, 0, 5], vec![6, 1, 0]]),
            1e-10,
            5000,
            0.1,
        )
        .unwrap();
        let k = result.strengths.len();
        for i in 0..k {
            for j in 0..k {
                let sum = result.win_prob[i][j] + result.win_prob[j][i];
                assert_eq!(sum, 1.0, "P[{i}][{j}] + P[{j}][{i}] = {sum}");
            }
        }
        let total: f64 = result.strengths.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn likelihood_is_monotone_over_iterations() {
        let result = bt_fit(
            &pc(vec![vec![0, 9, 4], vec![2, 0, 8], vec![5, 3, 0]]),
            0.0,
            60,
            0.0,
        )
        .unwrap();
        for pair in result.log_likelihood_trace.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-12,
                "log-likelihood decreased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn monte_carlo_recovery() {
        // Sample 500 duels per pair from known strengths; the fit must
        // recover the ordering and each strength within 0.05.
        let truth = [0.5, 0.3, 0.2];
        let mut rng = ChaCha12Rng::seed_from_u64(2718);
        let mut wins = vec![vec![0u64; 3]; 3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                for _ in 0..500 {
                    let p = truth[i] / (truth[i] + truth[j]);
                    if rng.gen::<f64>() < p {
                        wins[i][j] += 1;
                    } else {
                        wins[j][i] += 1;
                    }
                }
            }
        }
        let result = bt_fit(&pc(wins), DEFAULT_BT_TOL, DEFAULT_BT_MAX_ITER, DEFAULT_BT_PSEUDO)
            .unwrap();
        assert!(result.strengths[0] > result.strengths[1]);
        assert!(result.strengths[1] > result.strengths[2]);
        for (fitted, expected) in result.strengths.iter().zip(truth.iter()) {
            assert!(
                (fitted - expected).abs() < 0.05,
                "fitted {fitted} vs {expected}"
            );
        }
    }

    #[test]
    fn disconnected_graph_needs_pseudo() {
        // Components {0,1} and {2,3} never play each other.
        let wins = vec![
            vec![0, 2, 0, 0],
            vec![1, 0, 0, 0],
            vec![0, 0, 0, 3],
            vec![0, 0, 1, 0],
        ];
        assert!(matches!(
            bt_fit(&pc(wins.clone()), 1e-8, 100, 0.0),
            Err(EvalError::DisconnectedGraph)
        ));
        assert!(bt_fit(&pc(wins), 1e-8, 1000, 0.1).is_ok());
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            PairwiseComparisons::new(vec!["a".into()], vec![vec![1]]),
            Err(EvalError::BadWinMatrix)
        ));
        assert!(matches!(
            PairwiseComparisons::new(vec!["a".into(), "b".into()], vec![vec![0, 1]]),
            Err(EvalError::BadWinMatrix)
        ));
        let single = PairwiseComparisons::new(vec!["a".into()], vec![vec![0]]).unwrap();
        let result = bt_fit(&single, 1e-8, 10, 0.0).unwrap();
        assert_eq!(result.strengths, vec![1.0]);
        assert_eq!(result.win_prob[0][0], 0.5);
    }
}
