//! The TOML run configuration and its validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{CvConfig, Level2Eval, StrategySpec};
use crate::features::{load_stopwords, TokenizerConfig};
use crate::hierarchy::{PipelineConfig, StrategyKind, WeightingOverrides};
use crate::learners::{Hyperparams, LearnerKind};

/// File locations; relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

/// The config file as written. Learner names stay strings so that a bad
/// name produces our own message rather than a serde one.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    strategy: Option<String>,
    algo: Option<String>,
    algo_level1: Option<String>,
    algo_level2: Option<String>,
    folds: Option<usize>,
    seed: Option<u64>,
    level2_eval: Option<Level2Eval>,
    allow_sparse: bool,
    min_df: Option<u32>,
    select_top_k: Option<usize>,
    tokenizer: TokenizerConfig,
    weighting: WeightingOverrides,
    hyperparams: Hyperparams,
    paths: Paths,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub strategy: Option<String>,
    /// One name for flat, `level1,level2` for single-path.
    pub algo: Option<String>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub strategy: StrategySpec,
    pub folds: usize,
    pub seed: Option<u64>,
    pub level2_eval: Level2Eval,
    pub allow_sparse: bool,
    pub pipeline: PipelineConfig,
    pub hyperparams: Hyperparams,
    pub paths: Paths,
}

pub const DEFAULT_FOLDS: usize = 10;

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        Self::resolve(raw, base_dir, &Overrides::default())
    }

    /// Reads `path` if given, then applies `ov`.
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<RunConfig> {
        let (raw, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                let raw: RawConfig =
                    toml::from_str(&text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (raw, base)
            }
            None => (RawConfig::default(), PathBuf::new()),
        };
        Self::resolve(raw, &base, ov)
    }

    fn resolve(mut raw: RawConfig, base: &Path, ov: &Overrides) -> Result<RunConfig> {
        let rebase = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });
        raw.paths = Paths {
            corpus: rebase(raw.paths.corpus),
            model: rebase(raw.paths.model),
            report: rebase(raw.paths.report),
            stopwords: rebase(raw.paths.stopwords),
        };
        if let Some(c) = &ov.corpus {
            raw.paths.corpus = Some(c.clone());
        }

        if let Some(s) = &ov.strategy {
            raw.strategy = Some(s.clone());
        }
        let strategy = match raw.strategy.as_deref().unwrap_or("flat") {
            "flat" => StrategyKind::Flat,
            "single-path" | "single_path" => StrategyKind::SinglePath,
            other => {
                return Err(Error::Config(format!(
                    "unknown strategy `{other}` (expected flat or single-path)"
                )))
            }
        };
        if let Some(a) = &ov.algo {
            let parts: Vec<&str> = a.split([',', '+']).collect();
            match (strategy, parts.as_slice()) {
                (StrategyKind::Flat, [one]) => {
                    raw.algo = Some(one.to_string());
                    raw.algo_level1 = None;
                    raw.algo_level2 = None;
                }
                (StrategyKind::SinglePath, [one, two]) => {
                    raw.algo = None;
                    raw.algo_level1 = Some(one.to_string());
                    raw.algo_level2 = Some(two.to_string());
                }
                (StrategyKind::SinglePath, [one]) => {
                    raw.algo = None;
                    raw.algo_level1 = Some(one.to_string());
                    raw.algo_level2 = Some(one.to_string());
                }
                _ => return Err(Error::Config(format!("cannot use --algo `{a}` with this strategy"))),
            }
        }
        let spec = match strategy {
            StrategyKind::Flat => {
                if raw.algo_level1.is_some() || raw.algo_level2.is_some() {
                    return Err(Error::Config(
                        "algo_level1/algo_level2 belong to the single-path strategy; use `algo` for flat".into(),
                    ));
                }
                let algo = raw
                    .algo
                    .as_deref()
                    .ok_or_else(|| Error::Config("flat strategy needs `algo`".into()))?
                    .parse::<LearnerKind>()?;
                StrategySpec::Flat { algo }
            }
            StrategyKind::SinglePath => {
                if raw.algo.is_some() {
                    return Err(Error::Config(
                        "`algo` belongs to the flat strategy; use algo_level1 and algo_level2".into(),
                    ));
                }
                let need = |v: &Option<String>, name: &str| -> Result<LearnerKind> {
                    v.as_deref()
                        .ok_or_else(|| Error::Config(format!("single-path strategy needs `{name}`")))?
                        .parse()
                };
                StrategySpec::SinglePath {
                    algo_level1: need(&raw.algo_level1, "algo_level1")?,
                    algo_level2: need(&raw.algo_level2, "algo_level2")?,
                }
            }
        };

        let folds = ov.folds.or(raw.folds).unwrap_or(DEFAULT_FOLDS);
        if folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {folds}")));
        }
        let seed = ov.seed.or(raw.seed);
        let mut hyperparams = raw.hyperparams;
        if let Some(s) = seed {
            hyperparams.seed = s;
        }
        hyperparams.validate().map_err(as_config)?;

        let mut tokenizer = raw.tokenizer;
        if let Some(p) = &raw.paths.stopwords {
            let words = load_stopwords(p)?;
            let mut merged: Vec<String> = tokenizer.stopwords.iter().cloned().collect();
            merged.extend(words);
            tokenizer = tokenizer.with_stopwords(merged);
        }
        tokenizer.validate()?;
        if raw.select_top_k == Some(0) {
            return Err(Error::Config("select_top_k must be positive".into()));
        }
        let mut pipeline = PipelineConfig {
            tokenizer,
            weighting: raw.weighting,
            select_top_k: raw.select_top_k,
            ..PipelineConfig::default()
        };
        if let Some(m) = raw.min_df {
            pipeline.min_df = m;
        }

        Ok(RunConfig {
            strategy: spec,
            folds,
            seed,
            level2_eval: raw.level2_eval.unwrap_or(Level2Eval::PredictedRelevant),
            allow_sparse: raw.allow_sparse,
            pipeline,
            hyperparams,
            paths: raw.paths,
        })
    }

    /// The seed, which every stochastic command requires.
    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required (config `seed` or --seed)".into()))
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.paths
            .corpus
            .as_deref()
            .ok_or_else(|| Error::Config("no corpus given (config paths.corpus or --corpus)".into()))
    }

    pub fn cv_config(&self) -> Result<CvConfig> {
        let seed = self.require_seed()?;
        Ok(CvConfig {
            strategy: self.strategy,
            pipeline: self.pipeline.clone(),
            hyperparams: self.hyperparams.clone(),
            k: self.folds,
            seed,
            level2_eval: self.level2_eval,
            allow_sparse: self.allow_sparse,
        })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
