//! Multi-label classification metrics over caller-supplied label scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Ground-truth label matrix and predicted scores, n samples by L labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScores {
    pub truth: Vec<Vec<bool>>,
    pub scores: Vec<Vec<f64>>,
}

impl LabelScores {
    pub fn new(truth: Vec<Vec<bool>>, scores: Vec<Vec<f64>>) -> Result<Self, EvalError> {
        let n = truth.len();
        let l = truth.first().map(|r| r.len()).unwrap_or(0);
        if n == 0 || l == 0 {
            return Err(EvalError::EmptyLabels);
        }
        let score_l = scores.first().map(|r| r.len()).unwrap_or(0);
        if scores.len() != n
            || truth.iter().any(|r| r.len() != l)
            || scores.iter().any(|r| r.len() != score_l)
            || score_l != l
        {
            return Err(EvalError::ShapeMismatch {
                truth_rows: n,
                truth_cols: l,
                score_rows: scores.len(),
                score_cols: score_l,
            });
        }
        Ok(Self { truth, scores })
    }

    pub fn samples(&self) -> usize {
        self.truth.len()
    }

    pub fn labels(&self) -> usize {
        self.truth[0].len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// `None` when the pooled cells are single-class.
    pub micro_auc: Option<f64>,
    /// `None` when every label is single-class.
    pub macro_auc: Option<f64>,
    pub precision_at: BTreeMap<usize, f64>,
    /// Labels without a positive in truth (skipped by the macro averages)
    /// or without a negative (skipped by macro AUC only).
    pub skipped_labels: Vec<usize>,
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / denom as f64
}

/// Mann-Whitney AUC with midranks for tied scores. `None` when either
/// class is empty.
fn rank_auc(pairs: &[(f64, bool)]) -> Option<f64> {
    let positives = pairs.iter().filter(|(_, t)| *t).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.partial_cmp(&pairs[b].0).expect("finite scores"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pairs[order[j + 1]].0 == pairs[order[i]].0 {
            j += 1;
        }
        // Ranks are 1-based; tied scores share the midrank.
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if pairs[idx].1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Computes micro/macro F1 and AUC plus Precision@k. Predictions are
/// `score >= threshold`. Macro averages skip labels with no positive truth;
/// macro AUC additionally skips labels with no negative.
pub fn classification_metrics(
    ls: &LabelScores,
    threshold: f64,
    ks: &[usize],
) -> Result<ClassificationMetrics, EvalError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::BadThreshold(threshold));
    }
    let n = ls.samples();
    let l = ls.labels();
    for &k in ks {
        if k == 0 || k > l {
            return Err(EvalError::BadK { k, labels: l });
        }
    }

    // Pooled and per-label confusion counts.
    let mut micro = (0u64, 0u64, 0u64); // tp, fp, fn
    let mut per_label = vec![(0u64, 0u64, 0u64); l];
    for i in 0..n {
        for j in 0..l {
            let truth = ls.truth[i][j];
            let pred = ls.scores[i][j] >= threshold;
            match (truth, pred) {
                (true, true) => {
                    micro.0 += 1;
                    per_label[j].0 += 1;
                }
                (false, true) => {
                    micro.1 += 1;
                    per_label[j].1 += 1;
                }
                (true, false) => {
                    micro.2 += 1;
                    per_label[j].2 += 1;
                }
                (false, false) => {}
            }
        }
    }
    let micro_f1 = f1(micro.0, micro.1, micro.2);

    let mut skipped: Vec<usize> = Vec::new();
    let mut macro_f1_sum = 0.0;
    let mut macro_f1_n = 0usize;
    let mut macro_auc_sum = 0.0;
    let mut macro_auc_n = 0usize;
    for j in 0..l {
        let has_positive = (0..n).any(|i| ls.truth[i][j]);
        let has_negative = (0..n).any(|i| !ls.truth[i][j]);
        if !has_positive {
            skipped.push(j);
            continue;
        }
        let (tp, fp, fn_) = per_label[j];
        macro_f1_sum += f1(tp, fp, fn_);
        macro_f1_n += 1;
        if !has_negative {
            skipped.push(j);
            continue;
        }
        let pairs: Vec<(f64, bool)> = (0..n).map(|i| (ls.scores[i][j], ls.truth[i][j])).collect();
        macro_auc_sum += rank_auc(&pairs).expect("both classes present");
        macro_auc_n += 1;
    }
    if macro_f1_n == 0 {
        return Err(EvalError::NoValidLabels);
    }
    let macro_f1 = macro_f1_sum / macro_f1_n as f64;
    let macro_auc = (macro_auc_n > 0).then(|| macro_auc_sum / macro_auc_n as f64);

    let pooled: Vec<(f64, bool)> = (0..n)
        .flat_map(|i| (0..l).map(move |j| (i, j)))
        .map(|(i, j)| (ls.scores[i][j], ls.truth[i][j]))
        .collect();
    let micro_auc = rank_auc(&pooled);

    let mut precision_at = BTreeMap::new();
    for &k in ks {
        let mut sum = 0.0;
        for i in 0..n {
            let mut order: Vec<usize> = (0..l).collect();
            order.sort_by(|&a, &b| {
                ls.scores[i][b]
                    .partial_cmp(&ls.scores[i][a])
                    .expect("finite scores")
                    .then(a.cmp(&b))
            });
            let hits = order[..k].iter().filter(|&&j| ls.truth[i][j]).count();
            sum += hits as f64 / k as f64;
        }
        precision_at.insert(k, sum / n as f64);
    }

    Ok(ClassificationMetrics {
        micro_f1,
        macro_f1,
        micro_auc,
        macro_auc,
        precision_at,
        skipped_labels: skipped,
    })
}
