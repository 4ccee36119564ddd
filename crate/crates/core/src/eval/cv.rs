use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{class_metrics, ClassMetrics, ConfusionMatrix};
use crate::corpus::{hex_digest, stratified_kfold, Corpus, FoldPlan, Leaf, Relevance};
use crate::error::{Error, Result};
use crate::hierarchy::{
    train_flat, train_single_path, Level, PipelineConfig, StrategyKind, StrategyModel,
};
use crate::learners::{Hyperparams, LearnerKind};

/// Which strategy to train, with its learner(s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum StrategySpec {
    Flat {
        algo: LearnerKind,
    },
    SinglePath {
        algo_level1: LearnerKind,
        algo_level2: LearnerKind,
    },
}

impl StrategySpec {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategySpec::Flat { .. } => StrategyKind::Flat,
            StrategySpec::SinglePath { .. } => StrategyKind::SinglePath,
        }
    }

    pub fn learners(&self) -> Vec<LearnerKind> {
        match *self {
            StrategySpec::Flat { algo } => vec![algo],
            StrategySpec::SinglePath {
                algo_level1,
                algo_level2,
            } => vec![algo_level1, algo_level2],
        }
    }

    pub fn train(&self, c: &Corpus, pipeline: &PipelineConfig, h: &Hyperparams) -> Result<StrategyModel> {
        match *self {
            StrategySpec::Flat { algo } => train_flat(c, algo, pipeline, h),
            StrategySpec::SinglePath {
                algo_level1,
                algo_level2,
            } => train_single_path(c, algo_level1, algo_level2, pipeline, h),
        }
    }
}

/// How the efficacy level of a single-path model is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level2Eval {
    /// Every gold-relevant test question goes through the efficacy learner.
    GoldRelevant,
    /// Only questions the relevance learner passed on; gold-irrelevant ones
    /// among them are tallied as intruders.
    PredictedRelevant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    #[serde(flatten)]
    pub strategy: StrategySpec,
    pub pipeline: PipelineConfig,
    pub hyperparams: Hyperparams,
    pub k: usize,
    pub seed: u64,
    pub level2_eval: Level2Eval,
    #[serde(default)]
    pub allow_sparse: bool,
}

impl CvConfig {
    pub fn new(strategy: StrategySpec, k: usize, seed: u64) -> Self {
        CvConfig {
            strategy,
            pipeline: PipelineConfig::default(),
            hyperparams: Hyperparams::with_seed(seed),
            k,
            seed,
            level2_eval: Level2Eval::PredictedRelevant,
            allow_sparse: false,
        }
    }

    pub fn digest(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

/// Learner seed for one fold, derived from the master seed (splitmix64).
pub fn fold_seed(master: u64, fold: usize) -> u64 {
    let mut z = master.wrapping_add((fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Trains the model for `fold` on the other folds only.
pub fn train_fold(c: &Corpus, plan: &FoldPlan, fold: usize, cfg: &CvConfig) -> Result<StrategyModel> {
    let train = c.subset(&plan.train_indices(fold));
    let present = c.counts();
    let have = train.counts();
    for leaf in Leaf::ALL {
        if present.leaf(leaf) > 0 && have.leaf(leaf) == 0 {
            return Err(Error::Stratification {
                label: leaf.to_string(),
                count: present.leaf(leaf),
                k: plan.k(),
            });
        }
    }
    let h = Hyperparams {
        seed: fold_seed(cfg.seed, fold),
        ..cfg.hyperparams.clone()
    };
    cfg.strategy.train(&train, &cfg.pipeline, &h)
}

/// Raw per-fold tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub leaf: ConfusionMatrix,
    pub relevance: Option<ConfusionMatrix>,
    pub efficacy_gold: Option<ConfusionMatrix>,
    pub efficacy_predicted: Option<ConfusionMatrix>,
    pub intruders: u64,
    pub level2_invocations: u64,
}

pub(crate) fn leaf_labels() -> Vec<&'static str> {
    Leaf::ALL.iter().map(|l| l.as_str()).collect()
}

const RELEVANCE_LABELS: [&str; 2] = ["irrelevant", "relevant"];
const EFFICACY_LABELS: [&str; 2] = ["effective", "ineffective"];

pub fn evaluate_fold(model: &StrategyModel, test: &Corpus) -> Result<FoldOutcome> {
    let single_path = model.kind() == StrategyKind::SinglePath;
    let mut out = FoldOutcome {
        leaf: ConfusionMatrix::new(&leaf_labels()),
        relevance: single_path.then(|| ConfusionMatrix::new(&RELEVANCE_LABELS)),
        efficacy_gold: single_path.then(|| ConfusionMatrix::new(&EFFICACY_LABELS)),
        efficacy_predicted: single_path.then(|| ConfusionMatrix::new(&EFFICACY_LABELS)),
        intruders: 0,
        level2_invocations: 0,
    };
    for q in test.questions() {
        let Some(gold) = q.leaf() else { continue };
        let p = model.predict(&q.text)?;
        out.leaf.record(gold.as_str(), p.leaf.as_str())?;
        if !single_path {
            continue;
        }
        let routed = p.label_at(Level::Relevance).expect("relevance step always runs");
        out.relevance
            .as_mut()
            .unwrap()
            .record(gold.relevance().as_str(), routed)?;
        if p.trace.level2_invoked {
            out.level2_invocations += 1;
            let pred = p.label_at(Level::Efficacy).expect("efficacy step ran");
            match gold.efficacy() {
                Some(e) => out.efficacy_predicted.as_mut().unwrap().record(e.as_str(), pred)?,
                None => out.intruders += 1,
            }
        }
        if let Some(e) = gold.efficacy() {
            let pred = match p.label_at(Level::Efficacy) {
                Some(l) => l.to_string(),
                None => model
                    .predict_efficacy(&q.text)?
                    .expect("single-path model")
                    .as_str()
                    .to_string(),
            };
            out.efficacy_gold.as_mut().unwrap().record(e.as_str(), &pred)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionName {
    /// End-to-end three-way leaf classification.
    Leaf,
    Relevance,
    EfficacyGoldRelevant,
    EfficacyPredictedRelevant,
}

impl SectionName {
    pub fn as_str(self) -> &'static str {
        match self {
            SectionName::Leaf => "leaf",
            SectionName::Relevance => "relevance",
            SectionName::EfficacyGoldRelevant => "efficacy_gold_relevant",
            SectionName::EfficacyPredictedRelevant => "efficacy_predicted_relevant",
        }
    }

    /// The label whose identification the section reports on.
    pub fn positive(self) -> &'static str {
        match self {
            SectionName::Relevance => Relevance::Relevant.as_str(),
            _ => Leaf::Ineffective.as_str(),
        }
    }
}

/// Metrics derived from one confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub majority_baseline: Option<f64>,
    /// One entry per label, in confusion order.
    pub per_label: Vec<ClassMetrics>,
}

impl Summary {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Summary {
        let total = confusion.total();
        let accuracy = (total > 0).then(|| confusion.correct() as f64 / total as f64);
        let per_label = confusion
            .labels
            .iter()
            .map(|l| class_metrics(&confusion, l).expect("label from the universe"))
            .collect();
        Summary {
            majority_baseline: confusion.majority_share(),
            accuracy,
            per_label,
            confusion,
        }
    }

    pub fn metrics_for(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_label.iter().find(|m| m.positive == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub std: f64,
    /// Number of folds where the value was defined.
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Option<MeanStd> {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd {
            mean,
            std,
            n: v.len(),
        })
    }
}

/// Per-fold mean and spread of the headline numbers for the positive label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldStats {
    pub accuracy: Option<MeanStd>,
    pub precision: Option<MeanStd>,
    pub recall: Option<MeanStd>,
    pub f1: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intruders {
    pub pooled: u64,
    pub per_fold: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: SectionName,
    pub positive: String,
    pub pooled: Summary,
    pub folds: Vec<Summary>,
    pub fold_stats: FoldStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intruders: Option<Intruders>,
}

impl Section {
    fn build(name: SectionName, folds: Vec<ConfusionMatrix>, intruders: Option<Intruders>) -> Result<Section> {
        let mut pooled = ConfusionMatrix::new(&folds[0].labels);
        for f in &folds {
            pooled.merge(f)?;
        }
        let positive = name.positive();
        let folds: Vec<Summary> = folds.into_iter().map(Summary::from_confusion).collect();
        let pick = |f: fn(&ClassMetrics) -> Option<f64>| {
            MeanStd::of(folds.iter().map(|s| s.metrics_for(positive).and_then(f)))
        };
        let fold_stats = FoldStats {
            accuracy: MeanStd::of(folds.iter().map(|s| s.accuracy)),
            precision: pick(|m| m.precision),
            recall: pick(|m| m.recall),
            f1: pick(|m| m.f1),
        };
        Ok(Section {
            name,
            positive: positive.to_string(),
            pooled: Summary::from_confusion(pooled),
            folds,
            fold_stats,
            intruders,
        })
    }

    /// Pooled metrics of the positive label.
    pub fn headline(&self) -> &ClassMetrics {
        self.pooled.metrics_for(&self.positive).expect("positive label present")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub k: usize,
    pub corpus_digest: String,
    pub config_digest: String,
    pub labeled_questions: usize,
    pub config: CvConfig,
}

/// Cross-validation results. Serialized as a versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_version: u32,
    pub strategy: StrategyKind,
    pub learners: Vec<LearnerKind>,
    pub level2_eval: Level2Eval,
    pub metadata: ReportMetadata,
    /// Level-2 invocations per fold (single-path only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub level2_invocations: Vec<u64>,
    pub sections: Vec<Section>,
}

pub const REPORT_VERSION: u32 = 1;

impl EvalReport {
    pub fn section(&self, name: SectionName) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// The section whose positive label is the primary criterion:
    /// leaf for flat models, the configured efficacy framing otherwise.
    pub fn primary_section(&self) -> &Section {
        let name = match (self.strategy, self.level2_eval) {
            (StrategyKind::Flat, _) => SectionName::Leaf,
            (StrategyKind::SinglePath, Level2Eval::GoldRelevant) => SectionName::EfficacyGoldRelevant,
            (StrategyKind::SinglePath, Level2Eval::PredictedRelevant) => {
                SectionName::EfficacyPredictedRelevant
            }
        };
        self.section(name).expect("primary section present")
    }

    /// Row label used in tables, e.g. `SVM` or `NBM+SVM`.
    pub fn learner_label(&self) -> String {
        self.learners
            .iter()
            .map(|k| k.display_name())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Stratified k-fold cross-validation of one strategy configuration.
///
/// The vocabulary and every learner are refit on the training folds only.
/// Folds run in parallel; results do not depend on scheduling.
pub fn cross_validate(c: &Corpus, cfg: &CvConfig) -> Result<EvalReport> {
    cfg.hyperparams.validate()?;
    let plan = stratified_kfold(c, cfg.k, cfg.seed, cfg.allow_sparse)?;
    let outcomes: Vec<FoldOutcome> = (0..cfg.k)
        .into_par_iter()
        .map(|fold| {
            let model = train_fold(c, &plan, fold, cfg)?;
            evaluate_fold(&model, &c.subset(&plan.test_indices(fold)))
        })
        .collect::<Result<_>>()?;
    assemble(c, cfg, outcomes)
}

fn assemble(c: &Corpus, cfg: &CvConfig, outcomes: Vec<FoldOutcome>) -> Result<EvalReport> {
    let strategy = cfg.strategy.kind();
    let mut sections = Vec::new();
    let mut level2_invocations = Vec::new();
    if strategy == StrategyKind::SinglePath {
        let take = |f: fn(&FoldOutcome) -> &Option<ConfusionMatrix>| -> Vec<ConfusionMatrix> {
            outcomes.iter().map(|o| f(o).clone().unwrap()).collect()
        };
        let per_fold: Vec<u64> = outcomes.iter().map(|o| o.intruders).collect();
        let intruders = Intruders {
            pooled: per_fold.iter().sum(),
            per_fold,
        };
        sections.push(Section::build(SectionName::Relevance, take(|o| &o.relevance), None)?);
        let gold = Section::build(SectionName::EfficacyGoldRelevant, take(|o| &o.efficacy_gold), None)?;
        let predicted = Section::build(
            SectionName::EfficacyPredictedRelevant,
            take(|o| &o.efficacy_predicted),
            Some(intruders),
        )?;
        match cfg.level2_eval {
            Level2Eval::GoldRelevant => sections.extend([gold, predicted]),
            Level2Eval::PredictedRelevant => sections.extend([predicted, gold]),
        }
        level2_invocations = outcomes.iter().map(|o| o.level2_invocations).collect();
    }
    sections.push(Section::build(
        SectionName::Leaf,
        outcomes.iter().map(|o| o.leaf.clone()).collect(),
        None,
    )?);

    Ok(EvalReport {
        report_version: REPORT_VERSION,
        strategy,
        learners: cfg.strategy.learners(),
        level2_eval: cfg.level2_eval,
        metadata: ReportMetadata {
            seed: cfg.seed,
            k: cfg.k,
            corpus_digest: c.digest(),
            config_digest: cfg.digest(),
            labeled_questions: c.counts().labeled(),
            config: cfg.clone(),
        },
        level2_invocations,
        sections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{gen_synthetic, SyntheticSpec};

    #[test]
    fn fold_seeds_differ() {
        let seeds: std::collections::HashSet<_> = (0..10).map(|f| fold_seed(42, f)).collect();
        assert_eq!(seeds.len(), 10);
        assert_eq!(fold_seed(42, 3), fold_seed(42, 3));
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of([Some(1.0), None, Some(3.0)]).unwrap();
        assert_eq!((m.mean, m.n), (2.0, 2));
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of([None]), None);
        assert_eq!(MeanStd::of([Some(5.0)]).unwrap().std, 0.0);
    }

    #[test]
    fn flat_report_shape() {
        let c = gen_synthetic(&SyntheticSpec::with_counts(10, 12, 14), 1).unwrap();
        let cfg = CvConfig::new(StrategySpec::Flat { algo: LearnerKind::Nbm }, 5, 3);
        let r = cross_validate(&c, &cfg).unwrap();
        assert_eq!(r.sections.len(), 1);
        let s = r.primary_section();
        assert_eq!(s.name, SectionName::Leaf);
        assert_eq!(s.positive, "ineffective");
        assert_eq!(s.folds.len(), 5);
        assert_eq!(s.pooled.confusion.total(), 36);
        assert_eq!(s.pooled.accuracy, Some(1.0));
        assert!(r.level2_invocations.is_empty());
    }

    #[test]
    fn single_path_report_shape() {
        let c = gen_synthetic(&SyntheticSpec::with_counts(10, 12, 14), 1).unwrap();
        let mut cfg = CvConfig::new(
            StrategySpec::SinglePath {
                algo_level1: LearnerKind::Nbm,
                algo_level2: LearnerKind::Svm,
            },
            5,
            3,
        );
        cfg.level2_eval = Level2Eval::GoldRelevant;
        let r = cross_validate(&c, &cfg).unwrap();
        let names: Vec<_> = r.sections.iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            [
                SectionName::Relevance,
                SectionName::EfficacyGoldRelevant,
                SectionName::EfficacyPredictedRelevant,
                SectionName::Leaf
            ]
        );
        assert_eq!(r.primary_section().name, SectionName::EfficacyGoldRelevant);
        assert_eq!(r.section(SectionName::Relevance).unwrap().positive, "relevant");
        let rel = &r.section(SectionName::Relevance).unwrap().pooled.confusion;
        let invoked: u64 = r.level2_invocations.iter().sum();
        assert_eq!(invoked, rel.predicted(1));
        let pred = r.section(SectionName::EfficacyPredictedRelevant).unwrap();
        assert_eq!(pred.pooled.confusion.total() + pred.intruders.as_ref().unwrap().pooled, invoked);
        assert_eq!(r.learner_label(), "NBM+SVM");
    }

    #[test]
    fn sparse_labels_need_opt_in() {
        let c = gen_synthetic(&SyntheticSpec::with_counts(2, 12, 14), 1).unwrap();
        let mut cfg = CvConfig::new(StrategySpec::Flat { algo: LearnerKind::Nbm }, 5, 3);
        assert!(matches!(cross_validate(&c, &cfg), Err(Error::Stratification { .. })));
        cfg.allow_sparse = true;
        // folds that lose every irrelevant question from training still fail
        cfg.k = 3;
        let c1 = gen_synthetic(&SyntheticSpec::with_counts(1, 12, 14), 1).unwrap();
        assert!(matches!(cross_validate(&c1, &cfg), Err(Error::Stratification { .. })));
        let r = cross_validate(&c, &cfg).unwrap();
        assert_eq!(r.primary_section().pooled.confusion.total(), 28);
    }
}
