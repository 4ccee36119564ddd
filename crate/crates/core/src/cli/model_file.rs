//! Versioned JSON model files.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::hex_digest;
use crate::error::{Error, Result};
use crate::hierarchy::StrategyModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub corpus_digest: String,
    pub seed: u64,
    pub labeled_questions: usize,
    /// Seconds since the Unix epoch. Informational only.
    pub trained_at: u64,
}

/// A trained strategy model plus provenance. The vocabulary and tokenizer
/// settings travel inside the model's pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model: StrategyModel,
    pub metadata: ModelMetadata,
}

impl ModelFile {
    pub fn new(model: StrategyModel, corpus_digest: String, seed: u64, labeled_questions: usize) -> Self {
        let trained_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model,
            metadata: ModelMetadata {
                corpus_digest,
                seed,
                labeled_questions,
                trained_at,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("not a model file: {e}")))?;
        match v.get("format_version").and_then(|x| x.as_u64()) {
            Some(n) if n == MODEL_FORMAT_VERSION as u64 => {}
            Some(n) => {
                return Err(Error::Model(format!(
                    "unsupported model format_version {n} (this build reads {MODEL_FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::Model("missing format_version".into())),
        }
        serde_json::from_value(v).map_err(|e| Error::Model(format!("malformed model file: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 over everything except the timestamp.
    pub fn content_digest(&self) -> String {
        let mut copy = self.clone();
        copy.metadata.trained_at = 0;
        hex_digest(copy.to_json().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{gen_synthetic, SyntheticSpec};
    use crate::hierarchy::{train_flat, PipelineConfig};
    use crate::learners::{Hyperparams, LearnerKind};

    fn model() -> ModelFile {
        let c = gen_synthetic(&SyntheticSpec::with_counts(5, 5, 5), 2).unwrap();
        let m = train_flat(&c, LearnerKind::Lg, &PipelineConfig::default(), &Hyperparams::with_seed(2)).unwrap();
        ModelFile::new(m, c.digest(), 2, 15)
    }

    #[test]
    fn round_trip() {
        let f = model();
        let back = ModelFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.content_digest(), f.content_digest());
    }

    #[test]
    fn digest_ignores_timestamp() {
        let f = model();
        let mut g = f.clone();
        g.metadata.trained_at += 1000;
        assert_eq!(f.content_digest(), g.content_digest());
        g.metadata.seed += 1;
        assert_ne!(f.content_digest(), g.content_digest());
    }

    #[test]
    fn rejects_other_versions() {
        let text = model().to_json().replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert!(matches!(ModelFile::from_json(&text), Err(Error::Model(m)) if m.contains("99")));
        assert!(ModelFile::from_json("{}").is_err());
        assert!(ModelFile::from_json("nope").is_err());
    }
}
