//! Text to sparse feature vectors.

mod chi2;
mod sparse;
mod tokenize;
mod vocab;

pub use chi2::{chi2_2x2, chi2_scores, chi2_select};
pub use sparse::SparseVector;
pub use tokenize::{load_stopwords, tokenize, TokenizerConfig};
pub use vocab::{build_vocab, vectorize, Vocabulary, WeightingScheme};
