//! Question corpora: the label hierarchy, JSONL ingestion, label statistics,
//! stratified folds, inter-rater agreement and a synthetic generator.

mod folds;
mod kappa;
mod label;
mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use folds::{stratified_kfold, FoldPlan};
pub use kappa::cohen_kappa;
pub use label::{Efficacy, HierLabel, Leaf, Relevance, RubricFlags};
pub use synthetic::{gen_synthetic, SyntheticSpec};

/// One forum post.
#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub gold: Option<HierLabel>,
    pub rubrics: Option<RubricFlags>,
    pub source_tag: Option<String>,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Question {
            id: id.into(),
            text: text.into(),
            gold: None,
            rubrics: None,
            source_tag: None,
        }
    }

    pub fn labeled(id: impl Into<String>, text: impl Into<String>, leaf: Leaf) -> Self {
        Question {
            gold: Some(leaf.to_hier()),
            ..Question::new(id, text)
        }
    }

    pub fn leaf(&self) -> Option<Leaf> {
        self.gold.map(|g| g.leaf())
    }
}

/// Label breakdown of a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub total: usize,
    pub irrelevant: usize,
    pub relevant: usize,
    pub effective: usize,
    pub ineffective: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    fn tally<'a>(questions: impl IntoIterator<Item = &'a Question>) -> Self {
        let mut c = LabelCounts::default();
        for q in questions {
            c.total += 1;
            match q.leaf() {
                None => c.unlabeled += 1,
                Some(Leaf::Irrelevant) => c.irrelevant += 1,
                Some(Leaf::Effective) => {
                    c.relevant += 1;
                    c.effective += 1;
                }
                Some(Leaf::Ineffective) => {
                    c.relevant += 1;
                    c.ineffective += 1;
                }
            }
        }
        c
    }

    pub fn labeled(&self) -> usize {
        self.irrelevant + self.relevant
    }

    pub fn leaf(&self, leaf: Leaf) -> usize {
        match leaf {
            Leaf::Irrelevant => self.irrelevant,
            Leaf::Effective => self.effective,
            Leaf::Ineffective => self.ineffective,
        }
    }

    /// Both bookkeeping identities hold.
    pub fn is_consistent(&self) -> bool {
        self.relevant == self.effective + self.ineffective
            && self.total == self.irrelevant + self.relevant + self.unlabeled
    }
}

/// An ordered, immutable collection of questions with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    questions: Vec<Question>,
    counts: LabelCounts,
}

impl Corpus {
    pub fn new(questions: Vec<Question>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(questions.len());
        for q in &questions {
            if q.id.is_empty() {
                return Err(Error::Validation("question id must be non-empty".into()));
            }
            if !seen.insert(q.id.as_str()) {
                return Err(Error::Validation(format!("duplicate question id `{}`", q.id)));
            }
        }
        let counts = LabelCounts::tally(&questions);
        debug_assert!(counts.is_consistent());
        Ok(Corpus { questions, counts })
    }

    pub fn empty() -> Self {
        Corpus {
            questions: Vec::new(),
            counts: LabelCounts::default(),
        }
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn counts(&self) -> LabelCounts {
        self.counts
    }

    /// Parses JSONL text. Blank lines are skipped; line numbers are 1-based.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut questions = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let q = parse_record(&line, lineno)?;
            if !seen.insert(q.id.clone()) {
                return Err(Error::Validation(format!(
                    "line {lineno}: duplicate question id `{}`",
                    q.id
                )));
            }
            questions.push(q);
        }
        Corpus::new(questions)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for q in &self.questions {
            out.push_str(&record_line(q));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSONL serialization.
    pub fn digest(&self) -> String {
        hex_digest(self.to_jsonl().as_bytes())
    }

    /// A new corpus holding the questions at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let questions: Vec<_> = indices.iter().map(|&i| self.questions[i].clone()).collect();
        let counts = LabelCounts::tally(&questions);
        Corpus { questions, counts }
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let f = File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Corpus::from_reader(BufReader::new(f))
}

pub fn corpus_stats(c: &Corpus) -> LabelCounts {
    c.counts()
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    relevance: Relevance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    efficacy: Option<Efficacy>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<LabelRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rubrics: Option<RubricFlags>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, serde_json::Value>,
}

fn parse_record(line: &str, lineno: usize) -> Result<Question> {
    let rec: Record = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: lineno,
        message: e.to_string(),
    })?;
    for key in rec.extra.keys() {
        log::warn!("line {lineno}: ignoring unknown key `{key}`");
    }
    if rec.id.is_empty() {
        return Err(Error::Validation(format!("line {lineno}: empty question id")));
    }
    let gold = rec
        .label
        .map(|l| HierLabel::new(l.relevance, l.efficacy))
        .transpose()
        .map_err(|e| Error::Validation(format!("line {lineno}: {e}")))?;
    Ok(Question {
        id: rec.id,
        text: rec.text,
        gold,
        rubrics: rec.rubrics,
        source_tag: rec.source,
    })
}

fn record_line(q: &Question) -> String {
    let rec = Record {
        id: q.id.clone(),
        text: q.text.clone(),
        label: q.gold.map(|g| LabelRecord {
            relevance: g.relevance(),
            efficacy: g.efficacy(),
        }),
        rubrics: q.rubrics,
        source: q.source_tag.clone(),
        extra: BTreeMap::new(),
    };
    serde_json::to_string(&rec).expect("record serialization cannot fail")
}
