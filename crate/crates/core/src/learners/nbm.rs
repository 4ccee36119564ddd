//! Multinomial naive Bayes with additive smoothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbmModel {
    /// ln(count(label) / N)
    pub log_prior: Vec<f64>,
    /// `log_prob[label][feature]` = ln((count + alpha) / (total + alpha * V))
    pub log_prob: Vec<Vec<f64>>,
}

pub(crate) fn fit(
    xs: &[SparseVector],
    y: &[usize],
    n_labels: usize,
    dim: usize,
    alpha: f64,
) -> Result<NbmModel> {
    let mut doc_counts = vec![0usize; n_labels];
    let mut token_counts = vec![vec![0f64; dim]; n_labels];
    for (x, &l) in xs.iter().zip(y) {
        doc_counts[l] += 1;
        for (i, v) in x.pairs() {
            if v < 0.0 {
                return Err(Error::Argument(format!(
                    "naive Bayes needs non-negative feature values, got {v} at index {i}"
                )));
            }
            token_counts[l][i] += v;
        }
    }
    let n = xs.len() as f64;
    let log_prior = doc_counts.iter().map(|&c| (c as f64 / n).ln()).collect();
    let log_prob = token_counts
        .into_iter()
        .map(|counts| {
            let total: f64 = counts.iter().sum();
            let denom = (total + alpha * dim as f64).ln();
            counts.into_iter().map(|c| (c + alpha).ln() - denom).collect()
        })
        .collect();
    Ok(NbmModel {
        log_prior,
        log_prob,
    })
}

impl NbmModel {
    /// Joint log-likelihood per label: prior plus count-weighted token log-probabilities.
    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(&self.log_prob)
            .map(|(prior, lp)| prior + x.dot(lp))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{train_nbm, Hyperparams, Model};
    use super::*;
    use proptest::prelude::*;

    fn nbm(m: &super::super::TrainedLearner) -> &NbmModel {
        match m.model() {
            Model::Nbm(n) => n,
            _ => unreachable!(),
        }
    }

    #[test]
    fn two_document_laplace_example() {
        // vocab {a: 0, b: 1}; P = "a a", N = "b"
        let xs = [
            SparseVector::from_dense(&[2.0, 0.0]),
            SparseVector::from_dense(&[0.0, 1.0]),
        ];
        let m = train_nbm(&xs, &["P", "N"], &Hyperparams::default()).unwrap();
        assert_eq!(m.labels(), ["N", "P"]);
        let model = nbm(&m);
        assert!((model.log_prob[1][0] - (3.0f64 / 4.0).ln()).abs() < 1e-12);
        assert!((model.log_prob[0][0] - (1.0f64 / 3.0).ln()).abs() < 1e-12);

        let p = m.predict(&SparseVector::from_dense(&[1.0, 0.0])).unwrap();
        assert_eq!(p.label, "P");
        assert!((p.scores[1] - (3.0f64 / 8.0).ln()).abs() < 1e-9);
        assert!((p.scores[0] - (1.0f64 / 6.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn token_distributions_normalize() {
        let xs = [
            SparseVector::from_dense(&[3.0, 0.0, 1.0, 0.0]),
            SparseVector::from_dense(&[0.0, 2.0, 0.0, 7.0]),
            SparseVector::from_dense(&[1.0, 1.0, 1.0, 1.0]),
        ];
        let mut h = Hyperparams::default();
        h.nbm.alpha = 0.3;
        let m = train_nbm(&xs, &["a", "b", "c"], &h).unwrap();
        for lp in &nbm(&m).log_prob {
            let total: f64 = lp.iter().map(|x| x.exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mirrored_labels_tie_to_first() {
        let xs = [
            SparseVector::from_dense(&[1.0, 0.0]),
            SparseVector::from_dense(&[0.0, 1.0]),
        ];
        let m = train_nbm(&xs, &["zeta", "alpha"], &Hyperparams::default()).unwrap();
        let p = m.predict(&SparseVector::from_dense(&[1.0, 1.0])).unwrap();
        assert_eq!(p.scores[0], p.scores[1]);
        assert_eq!(p.label, "alpha");
    }

    #[test]
    fn empty_evidence_falls_back_to_prior() {
        let xs = [
            SparseVector::from_dense(&[1.0, 0.0]),
            SparseVector::from_dense(&[1.0, 0.0]),
            SparseVector::from_dense(&[0.0, 1.0]),
        ];
        let m = train_nbm(&xs, &["b", "b", "a"], &Hyperparams::default()).unwrap();
        assert_eq!(m.predict(&SparseVector::zeros(2)).unwrap().label, "b");
    }

    #[test]
    fn negative_values_rejected() {
        let xs = [SparseVector::from_dense(&[-1.0])];
        assert!(matches!(
            train_nbm(&xs, &["a"], &Hyperparams::default()),
            Err(Error::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn scaling_counts_keeps_strict_argmax(
            train in prop::collection::vec((prop::collection::vec(0u8..4, 4), 0u8..3), 3..15),
            doc in prop::collection::vec(0u8..4, 4),
            k in 2u32..6,
        ) {
            let xs: Vec<_> = train.iter()
                .map(|(r, _)| SparseVector::from_dense(&r.iter().map(|&c| c as f64).collect::<Vec<_>>()))
                .collect();
            let y: Vec<String> = train.iter().map(|(_, l)| format!("l{l}")).collect();
            let m = train_nbm(&xs, &y, &Hyperparams::default()).unwrap();
            let x = SparseVector::from_dense(&doc.iter().map(|&c| c as f64).collect::<Vec<_>>());
            // a purely evidence-driven comparison: drop the priors
            let model = nbm(&m);
            let like = |v: &SparseVector| -> Vec<f64> { model.log_prob.iter().map(|lp| v.dot(lp)).collect() };
            let base = like(&x);
            let scaled = like(&x.scaled(k as f64));
            for i in 0..base.len() {
                for j in 0..base.len() {
                    let gap = base[i] - base[j];
                    let sgap = scaled[i] - scaled[j];
                    prop_assert!((sgap - k as f64 * gap).abs() < 1e-9 * (1.0 + sgap.abs()));
                }
            }
            let best = super::super::argmax(&base);
            let strict = base.iter().enumerate().all(|(i, &s)| i == best || s < base[best]);
            if strict {
                prop_assert_eq!(super::super::argmax(&scaled), best);
            }
        }
    }
}
