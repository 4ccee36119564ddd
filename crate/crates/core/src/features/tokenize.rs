use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// 1 for unigrams only, 2 to add adjacent-pair tokens.
    pub ngram_max: u8,
    pub strip_code_blocks: bool,
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            ngram_max: 1,
            strip_code_blocks: false,
            stopwords: BTreeSet::new(),
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.ngram_max) {
            return Err(Error::Config(format!(
                "ngram_max must be 1 or 2, got {}",
                self.ngram_max
            )));
        }
        Ok(())
    }

    /// Stopwords are matched after case folding, so they are folded here too.
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = words
            .into_iter()
            .map(|w| {
                let w = w.as_ref().trim();
                if self.lowercase {
                    w.to_lowercase()
                } else {
                    w.to_string()
                }
            })
            .filter(|w| !w.is_empty())
            .collect();
        self
    }
}

/// One token per line; blank lines and `#` comments are skipped.
pub fn load_stopwords(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let stripped;
    let text = if cfg.strip_code_blocks {
        stripped = strip_code(text);
        stripped.as_str()
    } else {
        text
    };

    let mut unigrams = Vec::new();
    for raw in text.split_whitespace() {
        if cfg.strip_code_blocks && looks_like_code(raw) {
            continue;
        }
        let folded;
        let raw = if cfg.lowercase {
            folded = raw.to_lowercase();
            folded.as_str()
        } else {
            raw
        };
        let tok = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if tok.is_empty() || cfg.stopwords.contains(tok) {
            continue;
        }
        unigrams.push(tok.to_string());
    }

    if cfg.ngram_max >= 2 {
        let bigrams: Vec<String> = unigrams
            .windows(2)
            .map(|w| format!("{}_{}", w[0], w[1]))
            .collect();
        unigrams.extend(bigrams);
    }
    unigrams
}

/// Removes fenced (```) blocks and inline `code` spans.
fn strip_code(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        out.push_str(&rest[..start]);
        out.push(' ');
        match rest[start + 3..].find("```") {
            Some(end) => rest = &rest[start + 3 + end + 3..],
            None => {
                rest = "";
                break;
            }
        }
    }
    out.push_str(rest);

    let mut result = String::with_capacity(out.len());
    let mut in_span = false;
    for c in out.chars() {
        if c == '`' {
            in_span = !in_span;
            result.push(' ');
        } else if !in_span {
            result.push(c);
        }
    }
    result
}

/// Identifiers with call syntax, member access or statement punctuation,
/// e.g. `RandomWord.newWord();`.
fn looks_like_code(tok: &str) -> bool {
    if tok.contains(['(', ')', '{', '}', ';', '=', '<', '>', '[', ']']) {
        return true;
    }
    let chars: Vec<char> = tok.chars().collect();
    chars
        .windows(3)
        .any(|w| w[1] == '.' && w[0].is_alphanumeric() && w[2].is_alphabetic())
}
