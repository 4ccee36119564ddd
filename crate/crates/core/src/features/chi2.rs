use std::collections::BTreeMap;

use super::sparse::SparseVector;
use crate::error::{Error, Result};

/// Chi-square statistic of a 2x2 presence/label contingency table.
///
/// `a`: present & in label, `b`: present & not in label,
/// `c`: absent & in label, `d`: absent & not in label.
/// A table with an empty margin scores 0.
pub fn chi2_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = a + b + c + d;
    let denom = (a + c) * (b + d) * (a + b) * (c + d);
    if denom == 0.0 {
        return 0.0;
    }
    let diff = a * d - c * b;
    n * diff * diff / denom
}

/// Per-feature score: the maximum over labels of the presence-by-label chi-square.
pub fn chi2_scores<L: Ord>(vectors: &[SparseVector], labels: &[L]) -> Result<Vec<f64>> {
    if vectors.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    let dim = vectors.iter().map(SparseVector::dim).max().unwrap_or(0);
    let mut label_ids: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels {
        let next = label_ids.len();
        label_ids.entry(l).or_insert(next);
    }
    let n_labels = label_ids.len();
    let y: Vec<usize> = labels.iter().map(|l| label_ids[l]).collect();

    let mut docs_per_label = vec![0f64; n_labels];
    // present[f * n_labels + l] = documents of label l containing feature f
    let mut present = vec![0f64; dim * n_labels];
    for (x, &l) in vectors.iter().zip(&y) {
        docs_per_label[l] += 1.0;
        for (f, v) in x.pairs() {
            if v > 0.0 {
                present[f * n_labels + l] += 1.0;
            }
        }
    }
    let n = vectors.len() as f64;

    Ok((0..dim)
        .map(|f| {
            let row = &present[f * n_labels..(f + 1) * n_labels];
            let df: f64 = row.iter().sum();
            (0..n_labels)
                .map(|l| {
                    let a = row[l];
                    let b = df - a;
                    let c = docs_per_label[l] - a;
                    let d = n - a - b - c;
                    chi2_2x2(a, b, c, d)
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Indices of the `top_k` highest-scoring features, ascending.
/// Ties go to the lower index.
pub fn chi2_select<L: Ord>(vectors: &[SparseVector], labels: &[L], top_k: usize) -> Result<Vec<usize>> {
    if top_k == 0 {
        return Err(Error::Argument("top_k must be at least 1".into()));
    }
    let scores = chi2_scores(vectors, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.truncate(top_k);
    order.sort_unstable();
    Ok(order)
}
