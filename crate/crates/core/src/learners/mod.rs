//! The four classifiers behind one train/predict contract.
//!
//! Labels are plain strings. The label universe of a trained learner is
//! the sorted set of training labels, and every argmax breaks ties towards
//! the lexicographically first label.

pub mod bdt;
pub mod logreg;
pub mod nbm;
pub mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{SparseVector, WeightingScheme};

pub use tree::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Nbm,
    Lg,
    Svm,
    Bdt,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Nbm,
        LearnerKind::Lg,
        LearnerKind::Svm,
        LearnerKind::Bdt,
    ];

    /// Short config name: `nbm`, `lg`, `svm`, `bdt`.
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Nbm => "nbm",
            LearnerKind::Lg => "lg",
            LearnerKind::Svm => "svm",
            LearnerKind::Bdt => "bdt",
        }
    }

    /// Upper-case name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            LearnerKind::Nbm => "NBM",
            LearnerKind::Lg => "LG",
            LearnerKind::Svm => "SVM",
            LearnerKind::Bdt => "BDT",
        }
    }

    /// The weighting each learner is normally fed.
    pub fn default_weighting(self) -> WeightingScheme {
        match self {
            LearnerKind::Nbm => WeightingScheme::RawCount,
            LearnerKind::Lg | LearnerKind::Svm => WeightingScheme::L2NormalizedCount,
            LearnerKind::Bdt => WeightingScheme::BinaryPresence,
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm `{s}` (expected one of nbm, lg, svm, bdt)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbmParams {
    pub alpha: f64,
}

impl Default for NbmParams {
    fn default() -> Self {
        NbmParams { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegParams {
    pub lambda: f64,
    pub eta0: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            lambda: 1e-3,
            eta0: 0.1,
            epochs: 50,
            batch_size: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BdtParams {
    pub rounds: usize,
    pub max_depth: usize,
}

impl Default for BdtParams {
    fn default() -> Self {
        BdtParams {
            rounds: 100,
            max_depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub nbm: NbmParams,
    pub lg: LogRegParams,
    pub svm: SvmParams,
    pub bdt: BdtParams,
    pub seed: u64,
}

impl Hyperparams {
    pub fn with_seed(seed: u64) -> Self {
        Hyperparams {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid hyperparameter: {what}")));
        if !(self.nbm.alpha > 0.0 && self.nbm.alpha.is_finite()) {
            return bad("nbm.alpha must be > 0");
        }
        if !(self.lg.lambda >= 0.0 && self.lg.lambda.is_finite()) {
            return bad("lg.lambda must be >= 0");
        }
        if !(self.lg.eta0 > 0.0 && self.lg.eta0.is_finite()) {
            return bad("lg.eta0 must be > 0");
        }
        if self.lg.batch_size == 0 {
            return bad("lg.batch_size must be >= 1");
        }
        if !(self.svm.lambda > 0.0 && self.svm.lambda.is_finite()) {
            return bad("svm.lambda must be > 0");
        }
        if self.bdt.max_depth == 0 {
            return bad("bdt.max_depth must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Nbm(nbm::NbmModel),
    Lg(logreg::LogRegModel),
    Svm(svm::SvmModel),
    Bdt(bdt::BdtModel),
}

/// A fitted classifier over a fixed label universe and feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedLearner {
    labels: Vec<String>,
    dim: usize,
    model: Model,
    hyperparams: Hyperparams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    /// Aligned with the learner's label universe.
    pub scores: Vec<f64>,
}

impl TrainedLearner {
    pub fn kind(&self) -> LearnerKind {
        match self.model {
            Model::Nbm(_) => LearnerKind::Nbm,
            Model::Lg(_) => LearnerKind::Lg,
            Model::Svm(_) => LearnerKind::Svm,
            Model::Bdt(_) => LearnerKind::Bdt,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn predict(&self, x: &SparseVector) -> Result<Prediction> {
        if x.dim() != self.dim {
            return Err(Error::Argument(format!(
                "feature dimension {} does not match trained dimension {}",
                x.dim(),
                self.dim
            )));
        }
        let (best, scores) = match &self.model {
            Model::Nbm(m) => {
                let s = m.scores(x);
                (argmax(&s), s)
            }
            Model::Lg(m) => {
                let s = m.probabilities(x);
                (argmax(&s), s)
            }
            Model::Svm(m) => {
                let s = m.scores(x);
                (argmax(&s), s)
            }
            Model::Bdt(m) => m.predict(x),
        };
        Ok(Prediction {
            label: self.labels[best].clone(),
            scores,
        })
    }

    pub fn predict_batch(&self, xs: &[SparseVector]) -> Result<Vec<Prediction>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// First index of the maximum; NaN never wins.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Sorted label universe and per-example label indices.
pub(crate) fn encode_labels<S: AsRef<str>>(y: &[S]) -> (Vec<String>, Vec<usize>) {
    let mut labels: Vec<String> = y.iter().map(|s| s.as_ref().to_string()).collect();
    labels.sort();
    labels.dedup();
    let idx = y
        .iter()
        .map(|s| labels.binary_search_by(|l| l.as_str().cmp(s.as_ref())).unwrap())
        .collect();
    (labels, idx)
}

fn check_inputs<S>(xs: &[SparseVector], y: &[S]) -> Result<usize> {
    if xs.len() != y.len() {
        return Err(Error::Argument(format!(
            "{} feature vectors but {} labels",
            xs.len(),
            y.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::DegenerateTraining("no training examples".into()));
    }
    let dim = xs[0].dim();
    if xs.iter().any(|x| x.dim() != dim) {
        return Err(Error::Argument("feature vectors differ in dimension".into()));
    }
    Ok(dim)
}

/// Trains the learner of the given kind.
pub fn train<S: AsRef<str>>(
    kind: LearnerKind,
    xs: &[SparseVector],
    y: &[S],
    h: &Hyperparams,
) -> Result<TrainedLearner> {
    match kind {
        LearnerKind::Nbm => train_nbm(xs, y, h),
        LearnerKind::Lg => train_logreg(xs, y, h),
        LearnerKind::Svm => train_svm(xs, y, h),
        LearnerKind::Bdt => train_bdt(xs, y, h),
    }
}

fn finish(labels: Vec<String>, dim: usize, model: Model, h: &Hyperparams) -> TrainedLearner {
    TrainedLearner {
        labels,
        dim,
        model,
        hyperparams: h.clone(),
    }
}

fn require_two_labels(labels: &[String], what: &str) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "{what} needs at least two distinct labels, got {}",
            labels.len()
        )));
    }
    Ok(())
}

pub fn train_nbm<S: AsRef<str>>(xs: &[SparseVector], y: &[S], h: &Hyperparams) -> Result<TrainedLearner> {
    let dim = check_inputs(xs, y)?;
    let (labels, idx) = encode_labels(y);
    let m = nbm::fit(xs, &idx, labels.len(), dim, h.nbm.alpha)?;
    Ok(finish(labels, dim, Model::Nbm(m), h))
}

pub fn train_logreg<S: AsRef<str>>(xs: &[SparseVector], y: &[S], h: &Hyperparams) -> Result<TrainedLearner> {
    let dim = check_inputs(xs, y)?;
    let (labels, idx) = encode_labels(y);
    require_two_labels(&labels, "logistic regression")?;
    let m = logreg::fit(xs, &idx, labels.len(), dim, &h.lg, h.seed);
    Ok(finish(labels, dim, Model::Lg(m), h))
}

pub fn train_svm<S: AsRef<str>>(xs: &[SparseVector], y: &[S], h: &Hyperparams) -> Result<TrainedLearner> {
    let dim = check_inputs(xs, y)?;
    let (labels, idx) = encode_labels(y);
    require_two_labels(&labels, "SVM")?;
    let (m, _) = svm::fit(xs, &idx, labels.len(), dim, &h.svm, h.seed);
    Ok(finish(labels, dim, Model::Svm(m), h))
}

pub fn train_bdt<S: AsRef<str>>(xs: &[SparseVector], y: &[S], h: &Hyperparams) -> Result<TrainedLearner> {
    let dim = check_inputs(xs, y)?;
    let (labels, idx) = encode_labels(y);
    let (m, _) = bdt::fit(xs, &idx, labels.len(), dim, &h.bdt);
    Ok(finish(labels, dim, Model::Bdt(m), h))
}
