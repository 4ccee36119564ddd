use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level-1 judgement: is the question about the course material at all?
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Irrelevant,
    Relevant,
}

/// Level-2 judgement, only meaningful for relevant questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Efficacy {
    Effective,
    Ineffective,
}

/// One of the three terminal categories.
///
/// Variant order is the lexicographic order of the label names, so the
/// derived `Ord` doubles as the tie-break order used by every learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leaf {
    Effective,
    Ineffective,
    Irrelevant,
}

impl Relevance {
    pub const ALL: [Relevance; 2] = [Relevance::Irrelevant, Relevance::Relevant];

    pub fn as_str(self) -> &'static str {
        match self {
            Relevance::Irrelevant => "irrelevant",
            Relevance::Relevant => "relevant",
        }
    }
}

impl Efficacy {
    pub const ALL: [Efficacy; 2] = [Efficacy::Effective, Efficacy::Ineffective];

    pub fn as_str(self) -> &'static str {
        match self {
            Efficacy::Effective => "effective",
            Efficacy::Ineffective => "ineffective",
        }
    }
}

impl Leaf {
    /// Lexicographic order.
    pub const ALL: [Leaf; 3] = [Leaf::Effective, Leaf::Ineffective, Leaf::Irrelevant];

    pub fn as_str(self) -> &'static str {
        match self {
            Leaf::Effective => "effective",
            Leaf::Ineffective => "ineffective",
            Leaf::Irrelevant => "irrelevant",
        }
    }

    pub fn relevance(self) -> Relevance {
        match self {
            Leaf::Irrelevant => Relevance::Irrelevant,
            Leaf::Effective | Leaf::Ineffective => Relevance::Relevant,
        }
    }

    pub fn efficacy(self) -> Option<Efficacy> {
        match self {
            Leaf::Irrelevant => None,
            Leaf::Effective => Some(Efficacy::Effective),
            Leaf::Ineffective => Some(Efficacy::Ineffective),
        }
    }

    pub fn to_hier(self) -> HierLabel {
        HierLabel {
            relevance: self.relevance(),
            efficacy: self.efficacy(),
        }
    }
}

impl From<Efficacy> for Leaf {
    fn from(e: Efficacy) -> Leaf {
        match e {
            Efficacy::Effective => Leaf::Effective,
            Efficacy::Ineffective => Leaf::Ineffective,
        }
    }
}

macro_rules! impl_label_str {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|l| l.as_str() == s.trim().to_ascii_lowercase())
                    .ok_or_else(|| {
                        let names: Vec<_> = Self::ALL.iter().map(|l| l.as_str()).collect();
                        Error::Argument(format!(
                            "unknown {} label `{}` (expected one of {})",
                            $what,
                            s,
                            names.join(", ")
                        ))
                    })
            }
        }
    };
}

impl_label_str!(Relevance, "relevance");
impl_label_str!(Efficacy, "efficacy");
impl_label_str!(Leaf, "leaf");

/// Two-level label. `efficacy` is set exactly when the question is relevant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierLabel {
    relevance: Relevance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    efficacy: Option<Efficacy>,
}

impl HierLabel {
    pub fn new(relevance: Relevance, efficacy: Option<Efficacy>) -> Result<Self> {
        match (relevance, efficacy) {
            (Relevance::Irrelevant, Some(e)) => Err(Error::Validation(format!(
                "efficacy `{e}` given for an irrelevant question"
            ))),
            (Relevance::Relevant, None) => Err(Error::Validation(
                "relevant question is missing its efficacy label".into(),
            )),
            _ => Ok(HierLabel {
                relevance,
                efficacy,
            }),
        }
    }

    pub fn relevance(&self) -> Relevance {
        self.relevance
    }

    pub fn efficacy(&self) -> Option<Efficacy> {
        self.efficacy
    }

    pub fn leaf(&self) -> Leaf {
        match self.efficacy {
            None => Leaf::Irrelevant,
            Some(e) => e.into(),
        }
    }
}

/// The three annotation rubrics for question efficacy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RubricFlags {
    #[serde(rename = "prior_effort")]
    pub has_prior_effort: bool,
    #[serde(rename = "direct_answer")]
    pub asks_direct_answer: bool,
    #[serde(rename = "specific")]
    pub is_specific: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficacy_requires_relevance() {
        assert!(HierLabel::new(Relevance::Irrelevant, Some(Efficacy::Effective)).is_err());
        assert!(HierLabel::new(Relevance::Relevant, None).is_err());
        let l = HierLabel::new(Relevance::Relevant, Some(Efficacy::Ineffective)).unwrap();
        assert_eq!(l.leaf(), Leaf::Ineffective);
        assert_eq!(Leaf::Irrelevant.to_hier().leaf(), Leaf::Irrelevant);
    }

    #[test]
    fn leaf_order_is_lexicographic() {
        let mut names: Vec<_> = Leaf::ALL.iter().map(|l| l.as_str()).collect();
        let before = names.clone();
        names.sort();
        assert_eq!(names, before);
        assert!(Leaf::Effective < Leaf::Ineffective && Leaf::Ineffective < Leaf::Irrelevant);
    }

    #[test]
    fn parse_labels() {
        assert_eq!("Ineffective".parse::<Leaf>().unwrap(), Leaf::Ineffective);
        let err = "bogus".parse::<Leaf>().unwrap_err().to_string();
        assert!(err.contains("effective, ineffective, irrelevant"), "{err}");
    }
}
