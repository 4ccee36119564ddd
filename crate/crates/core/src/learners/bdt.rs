//! Multiclass boosting of shallow trees (SAMME).
//!
//! Each round fits a tree to the current example weights. Its stage weight
//! is `ln((1 - err) / err) + ln(L - 1)`; misclassified examples have their
//! weight multiplied by `exp(stage weight)` before renormalizing. A round
//! whose weighted error reaches `1 - 1/L` is discarded and ends boosting.
//! A perfect round uses `err = 1e-10` for its stage weight and also ends
//! boosting, since the weights would not change.

use serde::{Deserialize, Serialize};

use super::tree::{Columns, TreeBuilder};
use super::{BdtParams, Tree};
use crate::features::SparseVector;

pub const ERR_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdtModel {
    pub n_labels: usize,
    /// (tree, stage weight)
    pub stages: Vec<(Tree, f64)>,
    /// Weighted-majority label, used when no stage was accepted.
    pub fallback: usize,
}

impl BdtModel {
    /// Label index and per-label vote totals.
    pub fn predict(&self, x: &SparseVector) -> (usize, Vec<f64>) {
        let mut votes = vec![0.0; self.n_labels];
        if self.stages.is_empty() {
            return (self.fallback, votes);
        }
        for (tree, alpha) in &self.stages {
            votes[tree.predict(x)] += alpha;
        }
        (super::argmax(&votes), votes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub weighted_error: f64,
    pub stage_weight: f64,
    pub accepted: bool,
    /// Sum of example weights after the update (1 up to rounding).
    pub weight_sum: f64,
}

pub(crate) fn fit(
    xs: &[SparseVector],
    y: &[usize],
    n_labels: usize,
    dim: usize,
    params: &BdtParams,
) -> (BdtModel, Vec<RoundRecord>) {
    let n = xs.len();
    let cols = Columns::new(xs, dim);
    let mut weights = vec![1.0 / n as f64; n];
    let mut class_w = vec![0.0; n_labels];
    for &l in y {
        class_w[l] += 1.0;
    }
    let fallback = super::argmax(&class_w);
    let mut stages = Vec::new();
    let mut rounds = Vec::new();
    let l = n_labels as f64;

    for _ in 0..params.rounds {
        let tree = TreeBuilder::fit(&cols, y, &weights, n_labels, params.max_depth);
        let wrong: Vec<bool> = xs
            .iter()
            .zip(y)
            .map(|(x, &gold)| tree.predict(x) != gold)
            .collect();
        let total: f64 = weights.iter().sum();
        let err = weights
            .iter()
            .zip(&wrong)
            .filter(|(_, &w)| w)
            .map(|(wt, _)| wt)
            .sum::<f64>()
            / total;

        if n_labels == 1 {
            // single-label data: the tree is a constant leaf
            let alpha = ((1.0 - ERR_FLOOR) / ERR_FLOOR).ln();
            stages.push((tree, alpha));
            rounds.push(RoundRecord {
                weighted_error: err,
                stage_weight: alpha,
                accepted: true,
                weight_sum: total,
            });
            break;
        }
        if err >= 1.0 - 1.0 / l {
            rounds.push(RoundRecord {
                weighted_error: err,
                stage_weight: 0.0,
                accepted: false,
                weight_sum: total,
            });
            break;
        }
        let e = if err > 0.0 { err } else { ERR_FLOOR };
        let alpha = ((1.0 - e) / e).ln() + (l - 1.0).ln();
        stages.push((tree, alpha));
        if err == 0.0 {
            rounds.push(RoundRecord {
                weighted_error: err,
                stage_weight: alpha,
                accepted: true,
                weight_sum: total,
            });
            break;
        }
        let boost = alpha.exp();
        for (w, &bad) in weights.iter_mut().zip(&wrong) {
            if bad {
                *w *= boost;
            }
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        rounds.push(RoundRecord {
            weighted_error: err,
            stage_weight: alpha,
            accepted: true,
            weight_sum: weights.iter().sum(),
        });
    }
    (
        BdtModel {
            n_labels,
            stages,
            fallback,
        },
        rounds,
    )
}

/// Like [`super::train_bdt`] but also returns the per-round records.
pub fn train_with_trace<S: AsRef<str>>(
    xs: &[SparseVector],
    y: &[S],
    h: &super::Hyperparams,
) -> crate::Result<(super::TrainedLearner, Vec<RoundRecord>)> {
    let dim = super::check_inputs(xs, y)?;
    let (labels, idx) = super::encode_labels(y);
    let (m, rounds) = fit(xs, &idx, labels.len(), dim, &h.bdt);
    Ok((super::finish(labels, dim, super::Model::Bdt(m), h), rounds))
}
