use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// `counts[i][j]`: questions of gold label `i` predicted as label `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn record(&mut self, gold: &str, pred: &str) -> Result<()> {
        let g = self.index_of(gold).ok_or_else(|| unknown(gold))?;
        let p = self.index_of(pred).ok_or_else(|| unknown(pred))?;
        self.counts[g][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Row sum: number of gold questions with this label.
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn predicted(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    /// Largest gold-label share; `None` on an empty matrix.
    pub fn majority_share(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let max = (0..self.labels.len()).map(|i| self.support(i)).max().unwrap_or(0);
        Some(max as f64 / total as f64)
    }

    /// Element-wise sum; both matrices must share the label list.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::Argument("cannot merge confusion matrices with different labels".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }
}

fn unknown(label: &str) -> Error {
    Error::Argument(format!("label `{label}` is outside the label universe"))
}

pub fn confusion<A: AsRef<str>, B: AsRef<str>, S: AsRef<str>>(
    gold: &[A],
    pred: &[B],
    labels: &[S],
) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::Argument(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(labels);
    for (g, p) in gold.iter().zip(pred) {
        cm.record(g.as_ref(), p.as_ref())?;
    }
    Ok(cm)
}

/// Precision, recall and F1 for one designated positive label.
/// `None` marks an undefined value (zero denominator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub positive: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub support: u64,
}

/// Harmonic mean of precision and recall; undefined when both are zero.
pub fn f_measure(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    }
}

pub fn class_metrics(cm: &ConfusionMatrix, positive: &str) -> Result<ClassMetrics> {
    let i = cm.index_of(positive).ok_or_else(|| unknown(positive))?;
    let tp = cm.counts[i][i];
    let predicted = cm.predicted(i);
    let support = cm.support(i);
    let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
    let recall = (support > 0).then(|| tp as f64 / support as f64);
    Ok(ClassMetrics {
        positive: positive.to_string(),
        precision,
        recall,
        f1: f_measure(precision, recall),
        support,
    })
}

pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Argument("accuracy of an empty confusion matrix".into()));
    }
    Ok(cm.correct() as f64 / total as f64)
}

/// Which part of the hierarchy a baseline or report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelLevel {
    Leaf,
    Relevance,
    Efficacy,
}

/// Share of the most frequent label at `level` among labeled questions.
pub fn majority_baseline(c: &Corpus, level: LabelLevel) -> Result<f64> {
    let s = c.counts();
    let counts: Vec<usize> = match level {
        LabelLevel::Leaf => vec![s.irrelevant, s.effective, s.ineffective],
        LabelLevel::Relevance => vec![s.irrelevant, s.relevant],
        LabelLevel::Efficacy => vec![s.effective, s.ineffective],
    };
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Argument(format!(
            "no labeled questions at the {level:?} level"
        )));
    }
    Ok(*counts.iter().max().unwrap() as f64 / total as f64)
}
