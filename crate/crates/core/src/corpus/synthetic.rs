use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Leaf, Question};
use crate::error::{Error, Result};

/// Parameters for a synthetic labeled corpus.
///
/// The vocabulary is cut into four equal pools: one shared and one per leaf
/// label. Each token of a question of label `l` comes from `l`'s own pool
/// with probability `separation` and from the shared pool otherwise, with a
/// Zipf-shaped distribution inside every pool. `separation = 1` therefore
/// gives label-disjoint texts and `separation = 0` label-independent ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub irrelevant: usize,
    pub effective: usize,
    pub ineffective: usize,
    pub vocab_size: usize,
    pub separation: f64,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            irrelevant: 0,
            effective: 0,
            ineffective: 0,
            vocab_size: 600,
            separation: 1.0,
            min_len: 10,
            max_len: 40,
        }
    }
}

impl SyntheticSpec {
    pub fn with_counts(irrelevant: usize, effective: usize, ineffective: usize) -> Self {
        SyntheticSpec {
            irrelevant,
            effective,
            ineffective,
            ..Default::default()
        }
    }

    /// The 983-question reference breakdown: 240 irrelevant, 366 effective,
    /// 377 ineffective.
    pub fn reference_counts() -> Self {
        Self::with_counts(240, 366, 377)
    }

    pub fn count(&self, leaf: Leaf) -> usize {
        match leaf {
            Leaf::Irrelevant => self.irrelevant,
            Leaf::Effective => self.effective,
            Leaf::Ineffective => self.ineffective,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.separation) {
            return Err(Error::Argument(format!(
                "separation must lie in [0, 1], got {}",
                self.separation
            )));
        }
        if self.vocab_size < 4 {
            return Err(Error::Argument("vocab_size must be at least 4".into()));
        }
        if self.min_len > self.max_len {
            return Err(Error::Argument(format!(
                "min_len {} exceeds max_len {}",
                self.min_len, self.max_len
            )));
        }
        Ok(())
    }
}

/// Token prefix of the pool a label draws its own tokens from.
pub(crate) fn pool_prefix(leaf: Option<Leaf>) -> &'static str {
    match leaf {
        None => "shr",
        Some(Leaf::Irrelevant) => "irr",
        Some(Leaf::Effective) => "eff",
        Some(Leaf::Ineffective) => "ine",
    }
}

pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool_size = spec.vocab_size / 4;
    let zipf = WeightedIndex::new((0..pool_size).map(|r| 1.0 / (r + 1) as f64))
        .expect("pool is non-empty");

    // Labels are dealt in a fixed order, then shuffled.
    let mut leaves = Vec::new();
    for leaf in [Leaf::Irrelevant, Leaf::Effective, Leaf::Ineffective] {
        leaves.extend(std::iter::repeat_n(leaf, spec.count(leaf)));
    }
    leaves.shuffle(&mut rng);

    let width = leaves.len().max(1).to_string().len();
    let questions = leaves
        .into_iter()
        .enumerate()
        .map(|(i, leaf)| {
            let len = rng.gen_range(spec.min_len..=spec.max_len);
            let tokens: Vec<String> = (0..len)
                .map(|_| {
                    let own = spec.separation >= 1.0 || rng.gen_bool(spec.separation);
                    let pool = if own { Some(leaf) } else { None };
                    format!("{}{}", pool_prefix(pool), zipf.sample(&mut rng))
                })
                .collect();
            let mut q = Question::labeled(format!("q{i:0width$}"), tokens.join(" "), leaf);
            q.source_tag = Some("synthetic".into());
            q
        })
        .collect();
    Corpus::new(questions)
}
