use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::sparse::SparseVector;
use crate::error::{Error, Result};

/// Frozen token-to-index map. Indices follow lexicographic token order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    doc_freq: Vec<u32>,
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabRepr) -> Result<Self> {
        if r.tokens.len() != r.doc_freq.len() {
            return Err(Error::Model("vocabulary token and frequency lists differ".into()));
        }
        if r.tokens.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Model("vocabulary tokens are not strictly sorted".into()));
        }
        Ok(Vocabulary::from_sorted(r.tokens, r.doc_freq))
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tokens: v.tokens,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    fn from_sorted(tokens: Vec<String>, doc_freq: Vec<u32>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            doc_freq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|&i| i as usize)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn doc_freq(&self, index: usize) -> u32 {
        self.doc_freq[index]
    }

    /// Keeps only the given indices; the survivors are re-indexed densely.
    pub fn retain(&self, keep: &[usize]) -> Vocabulary {
        let mut keep: Vec<usize> = keep.iter().copied().filter(|&i| i < self.len()).collect();
        keep.sort_unstable();
        keep.dedup();
        Vocabulary::from_sorted(
            keep.iter().map(|&i| self.tokens[i].clone()).collect(),
            keep.iter().map(|&i| self.doc_freq[i]).collect(),
        )
    }
}

pub fn build_vocab<D: AsRef<[String]>>(docs: &[D], min_df: u32) -> Result<Vocabulary> {
    if min_df < 1 {
        return Err(Error::Argument("min_df must be at least 1".into()));
    }
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
        for tok in unique {
            *df.entry(tok).or_default() += 1;
        }
    }
    let (tokens, doc_freq) = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, n)| (t.to_string(), n))
        .unzip();
    Ok(Vocabulary::from_sorted(tokens, doc_freq))
}

/// How token occurrences become feature values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingScheme {
    RawCount,
    BinaryPresence,
    L2NormalizedCount,
}

pub fn vectorize<S: AsRef<str>>(tokens: &[S], v: &Vocabulary, w: WeightingScheme) -> SparseVector {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for t in tokens {
        if let Some(&i) = v.index.get(t.as_ref()) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    let (indices, mut values): (Vec<u32>, Vec<f64>) = counts.into_iter().unzip();
    match w {
        WeightingScheme::RawCount => {}
        WeightingScheme::BinaryPresence => values.iter_mut().for_each(|x| *x = 1.0),
        WeightingScheme::L2NormalizedCount => {
            let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                values.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }
    SparseVector::from_parts_unchecked(v.len(), indices, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs(d: &[&[&str]]) -> Vec<Vec<String>> {
        d.iter()
            .map(|doc| doc.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn lexicographic_indices_and_min_df() {
        let d = docs(&[&["b", "a"], &["a"]]);
        let v = build_vocab(&d, 1).unwrap();
        assert_eq!((v.get("a"), v.get("b")), (Some(0), Some(1)));
        assert_eq!(v.doc_freq(0), 2);
        let v2 = build_vocab(&d, 2).unwrap();
        assert_eq!(v2.tokens(), ["a"]);
        assert!(build_vocab::<Vec<String>>(&[], 1).unwrap().is_empty());
        assert!(build_vocab(&d, 0).is_err());
    }

    #[test]
    fn weighting_schemes() {
        let v = build_vocab(&docs(&[&["a", "b"]]), 1).unwrap();
        let toks = ["a", "a", "b"];
        let raw = vectorize(&toks, &v, WeightingScheme::RawCount);
        assert_eq!(raw.pairs().collect::<Vec<_>>(), [(0, 2.0), (1, 1.0)]);
        let bin = vectorize(&toks, &v, WeightingScheme::BinaryPresence);
        assert_eq!(bin.pairs().collect::<Vec<_>>(), [(0, 1.0), (1, 1.0)]);
        let l2 = vectorize(&toks, &v, WeightingScheme::L2NormalizedCount);
        let p: Vec<_> = l2.pairs().collect();
        let s5 = 5f64.sqrt();
        assert!((p[0].1 - 2.0 / s5).abs() < 1e-15 && (p[1].1 - 1.0 / s5).abs() < 1e-15);
        for w in [
            WeightingScheme::RawCount,
            WeightingScheme::BinaryPresence,
            WeightingScheme::L2NormalizedCount,
        ] {
            let z = vectorize(&["z"], &v, w);
            assert_eq!(z.nnz(), 0);
            assert_eq!(z.dim(), 2);
        }
    }

    #[test]
    fn retain_reindexes() {
        let v = build_vocab(&docs(&[&["a", "b", "c", "d"]]), 1).unwrap();
        let r = v.retain(&[3, 1, 1, 9]);
        assert_eq!(r.tokens(), ["b", "d"]);
        assert_eq!(r.get("d"), Some(1));
    }

    #[test]
    fn serde_rebuilds_index() {
        let v = build_vocab(&docs(&[&["x", "y"], &["y"]]), 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.get("y"), Some(1));
        assert!(serde_json::from_str::<Vocabulary>(r#"{"tokens":["b","a"],"doc_freq":[1,1]}"#).is_err());
    }

    proptest! {
        #[test]
        fn raw_count_mass_equals_in_vocab_tokens(
            corpus in prop::collection::vec(prop::collection::vec("[a-f]{1,2}", 0..8), 1..6),
            query in prop::collection::vec("[a-h]{1,2}", 0..20),
        ) {
            let v = build_vocab(&corpus, 1).unwrap();
            let x = vectorize(&query, &v, WeightingScheme::RawCount);
            let in_vocab = query.iter().filter(|t| v.get(t).is_some()).count();
            prop_assert_eq!(x.values().iter().sum::<f64>(), in_vocab as f64);
        }

        #[test]
        fn document_order_does_not_matter(
            corpus in prop::collection::vec(prop::collection::vec("[a-f]{1,2}", 0..8), 1..6),
            min_df in 1u32..3,
        ) {
            let mut reversed = corpus.clone();
            reversed.reverse();
            prop_assert_eq!(build_vocab(&corpus, min_df).unwrap(), build_vocab(&reversed, min_df).unwrap());
        }

        #[test]
        fn l2_vectors_have_unit_norm(query in prop::collection::vec("[a-c]", 0..20)) {
            let v = build_vocab(&[vec!["a".to_string(), "b".to_string()]], 1).unwrap();
            let x = vectorize(&query, &v, WeightingScheme::L2NormalizedCount);
            let norm: f64 = x.values().iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(x.nnz() == 0 || (norm - 1.0).abs() < 1e-12);
        }
    }
}
