use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Leaf};
use crate::error::{Error, Result};

/// Fold assignment for every labeled question; unlabeled questions get `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<Option<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[Option<usize>] {
        &self.assignments
    }

    /// Held-out question indices for `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == Some(fold))
            .map(|(i, _)| i)
            .collect()
    }

    /// Labeled question indices outside `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a, Some(f) if *f != fold))
            .map(|(i, _)| i)
            .collect()
    }

    /// `counts[fold][leaf]` using `Leaf::ALL` order.
    pub fn label_counts(&self, c: &Corpus) -> Vec<[usize; 3]> {
        let mut counts = vec![[0usize; 3]; self.k];
        for (q, a) in c.questions().iter().zip(&self.assignments) {
            if let (Some(f), Some(leaf)) = (a, q.leaf()) {
                counts[*f][leaf as usize] += 1;
            }
        }
        counts
    }
}

/// Stratified k-fold split over leaf labels.
///
/// Members of each label are shuffled with a generator seeded from `seed`
/// and dealt round-robin, continuing where the previous label stopped so
/// that total fold sizes stay balanced as well. Labels with fewer than `k`
/// members are rejected unless `allow_sparse` is set.
pub fn stratified_kfold(c: &Corpus, k: usize, seed: u64, allow_sparse: bool) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Argument(format!("fold count must be at least 2, got {k}")));
    }
    let mut by_label: [Vec<usize>; 3] = Default::default();
    for (i, q) in c.questions().iter().enumerate() {
        if let Some(leaf) = q.leaf() {
            by_label[leaf as usize].push(i);
        }
    }
    if !allow_sparse {
        for leaf in Leaf::ALL {
            let n = by_label[leaf as usize].len();
            if n > 0 && n < k {
                return Err(Error::Stratification {
                    label: leaf.to_string(),
                    count: n,
                    k,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![None; c.len()];
    let mut offset = 0;
    for members in by_label.iter_mut() {
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            assignments[i] = Some((offset + j) % k);
        }
        offset = (offset + members.len()) % k;
    }
    Ok(FoldPlan { k, assignments })
}
