//! Flat and single-path composition of learners over the label hierarchy.
//!
//! Flat mode trains one learner over the three leaf labels. Single-path
//! mode trains a relevance learner on every labeled question and an
//! efficacy learner on the gold-relevant ones; at prediction time the
//! efficacy learner only runs when the relevance learner says `relevant`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Efficacy, Leaf, Question, Relevance};
use crate::error::{Error, Result};
use crate::features::{
    build_vocab, chi2_select, tokenize, vectorize, SparseVector, TokenizerConfig, Vocabulary,
    WeightingScheme,
};
use crate::learners::{self, Hyperparams, LearnerKind, Prediction, TrainedLearner};

/// Per-learner weighting; `None` means the learner's default.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightingOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbm: Option<WeightingScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lg: Option<WeightingScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm: Option<WeightingScheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bdt: Option<WeightingScheme>,
}

impl WeightingOverrides {
    pub fn for_kind(&self, kind: LearnerKind) -> WeightingScheme {
        let o = match kind {
            LearnerKind::Nbm => self.nbm,
            LearnerKind::Lg => self.lg,
            LearnerKind::Svm => self.svm,
            LearnerKind::Bdt => self.bdt,
        };
        o.unwrap_or_else(|| kind.default_weighting())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tokenizer: TokenizerConfig,
    pub min_df: u32,
    pub weighting: WeightingOverrides,
    /// Keep only the top-k features by max-over-labels chi-square.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select_top_k: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tokenizer: TokenizerConfig::default(),
            min_df: 2,
            weighting: WeightingOverrides::default(),
            select_top_k: None,
        }
    }
}

/// Tokenizer settings plus the vocabulary fitted on training texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub vocab: Vocabulary,
}

impl Pipeline {
    /// Fits the vocabulary (and optional chi-square selection) on `train`.
    pub fn fit(config: &PipelineConfig, train: &[&Question]) -> Result<Pipeline> {
        config.tokenizer.validate()?;
        let docs: Vec<Vec<String>> = train
            .iter()
            .map(|q| tokenize(&q.text, &config.tokenizer))
            .collect();
        let mut vocab = build_vocab(&docs, config.min_df)?;
        if let Some(k) = config.select_top_k {
            let presence: Vec<SparseVector> = docs
                .iter()
                .map(|d| vectorize(d, &vocab, WeightingScheme::BinaryPresence))
                .collect();
            let labels: Vec<Option<Leaf>> = train.iter().map(|q| q.leaf()).collect();
            let keep = chi2_select(&presence, &labels, k)?;
            vocab = vocab.retain(&keep);
        }
        Ok(Pipeline {
            config: config.clone(),
            vocab,
        })
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.config.tokenizer)
    }

    pub fn featurize_tokens(&self, tokens: &[String], kind: LearnerKind) -> SparseVector {
        vectorize(tokens, &self.vocab, self.config.weighting.for_kind(kind))
    }

    pub fn featurize(&self, text: &str, kind: LearnerKind) -> SparseVector {
        self.featurize_tokens(&self.tokens(text), kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Flat,
    SinglePath,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Flat => "flat",
            StrategyKind::SinglePath => "single-path",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum StrategyMode {
    Flat {
        learner: TrainedLearner,
    },
    SinglePath {
        level1: TrainedLearner,
        level2: TrainedLearner,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyModel {
    pub pipeline: Pipeline,
    pub mode: StrategyMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Leaf,
    Relevance,
    Efficacy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStep {
    pub level: Level,
    pub label: String,
    pub scores: BTreeMap<String, f64>,
}

/// The route a question took through the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTrace {
    pub steps: Vec<LevelStep>,
    pub level2_invoked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyPrediction {
    pub leaf: Leaf,
    pub trace: PathTrace,
}

impl StrategyPrediction {
    /// Label chosen at `level`, if that level ran.
    pub fn label_at(&self, level: Level) -> Option<&str> {
        self.trace
            .steps
            .iter()
            .find(|s| s.level == level)
            .map(|s| s.label.as_str())
    }
}

fn labeled(c: &Corpus) -> Result<Vec<&Question>> {
    let qs: Vec<&Question> = c.questions().iter().filter(|q| q.gold.is_some()).collect();
    if qs.is_empty() {
        return Err(Error::Training("corpus has no labeled questions".into()));
    }
    Ok(qs)
}

pub fn train_flat(
    c: &Corpus,
    kind: LearnerKind,
    config: &PipelineConfig,
    h: &Hyperparams,
) -> Result<StrategyModel> {
    let train = labeled(c)?;
    let pipeline = Pipeline::fit(config, &train)?;
    let xs: Vec<SparseVector> = train.iter().map(|q| pipeline.featurize(&q.text, kind)).collect();
    let y: Vec<&str> = train.iter().map(|q| q.leaf().unwrap().as_str()).collect();
    let learner = learners::train(kind, &xs, &y, h)?;
    Ok(StrategyModel {
        pipeline,
        mode: StrategyMode::Flat { learner },
    })
}

/// Seed offset for the efficacy learner, so the two levels draw distinct streams.
const LEVEL2_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn train_single_path(
    c: &Corpus,
    kind1: LearnerKind,
    kind2: LearnerKind,
    config: &PipelineConfig,
    h: &Hyperparams,
) -> Result<StrategyModel> {
    let train = labeled(c)?;
    let pipeline = Pipeline::fit(config, &train)?;
    let tokens: Vec<Vec<String>> = train.iter().map(|q| pipeline.tokens(&q.text)).collect();

    let rel: Vec<Relevance> = train.iter().map(|q| q.leaf().unwrap().relevance()).collect();
    for r in Relevance::ALL {
        if !rel.contains(&r) {
            return Err(Error::Training(format!(
                "single-path training needs `{r}` questions at the relevance level"
            )));
        }
    }
    let x1: Vec<SparseVector> = tokens.iter().map(|t| pipeline.featurize_tokens(t, kind1)).collect();
    let y1: Vec<&str> = rel.iter().map(|r| r.as_str()).collect();
    let level1 = learners::train(kind1, &x1, &y1, h)?;

    let mut x2 = Vec::new();
    let mut y2 = Vec::new();
    for (q, t) in train.iter().zip(&tokens) {
        if let Some(e) = q.leaf().unwrap().efficacy() {
            x2.push(pipeline.featurize_tokens(t, kind2));
            y2.push(e.as_str());
        }
    }
    for e in Efficacy::ALL {
        if !y2.contains(&e.as_str()) {
            return Err(Error::Training(format!(
                "single-path training needs `{e}` questions among the relevant ones"
            )));
        }
    }
    let h2 = Hyperparams {
        seed: h.seed.wrapping_add(LEVEL2_SEED_OFFSET),
        ..h.clone()
    };
    let level2 = learners::train(kind2, &x2, &y2, &h2)?;
    Ok(StrategyModel {
        pipeline,
        mode: StrategyMode::SinglePath { level1, level2 },
    })
}

fn step(level: Level, learner: &TrainedLearner, p: &Prediction) -> LevelStep {
    LevelStep {
        level,
        label: p.label.clone(),
        scores: learner
            .labels()
            .iter()
            .cloned()
            .zip(p.scores.iter().copied())
            .collect(),
    }
}

impl StrategyModel {
    pub fn kind(&self) -> StrategyKind {
        match self.mode {
            StrategyMode::Flat { .. } => StrategyKind::Flat,
            StrategyMode::SinglePath { .. } => StrategyKind::SinglePath,
        }
    }

    /// Learner kinds in level order.
    pub fn learner_kinds(&self) -> Vec<LearnerKind> {
        match &self.mode {
            StrategyMode::Flat { learner } => vec![learner.kind()],
            StrategyMode::SinglePath { level1, level2 } => vec![level1.kind(), level2.kind()],
        }
    }

    pub fn predict(&self, text: &str) -> Result<StrategyPrediction> {
        let tokens = self.pipeline.tokens(text);
        match &self.mode {
            StrategyMode::Flat { learner } => {
                let p = learner.predict(&self.pipeline.featurize_tokens(&tokens, learner.kind()))?;
                let leaf: Leaf = p.label.parse()?;
                Ok(StrategyPrediction {
                    leaf,
                    trace: PathTrace {
                        steps: vec![step(Level::Leaf, learner, &p)],
                        level2_invoked: false,
                    },
                })
            }
            StrategyMode::SinglePath { level1, level2 } => {
                let p1 = level1.predict(&self.pipeline.featurize_tokens(&tokens, level1.kind()))?;
                let mut steps = vec![step(Level::Relevance, level1, &p1)];
                if p1.label.parse::<Relevance>()? == Relevance::Irrelevant {
                    return Ok(StrategyPrediction {
                        leaf: Leaf::Irrelevant,
                        trace: PathTrace {
                            steps,
                            level2_invoked: false,
                        },
                    });
                }
                let p2 = level2.predict(&self.pipeline.featurize_tokens(&tokens, level2.kind()))?;
                steps.push(step(Level::Efficacy, level2, &p2));
                let leaf = Leaf::from(p2.label.parse::<Efficacy>()?);
                Ok(StrategyPrediction {
                    leaf,
                    trace: PathTrace {
                        steps,
                        level2_invoked: true,
                    },
                })
            }
        }
    }

    /// Runs the efficacy learner regardless of the relevance decision.
    /// `None` for flat models.
    pub fn predict_efficacy(&self, text: &str) -> Result<Option<Efficacy>> {
        match &self.mode {
            StrategyMode::Flat { .. } => Ok(None),
            StrategyMode::SinglePath { level2, .. } => {
                let p = level2.predict(&self.pipeline.featurize(text, level2.kind()))?;
                Ok(Some(p.label.parse()?))
            }
        }
    }

    /// Order-preserving parallel prediction.
    pub fn predict_batch<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Result<Vec<StrategyPrediction>> {
        texts.par_iter().map(|t| self.predict(t.as_ref())).collect()
    }
}
