//! Triage of student forum questions into learning-irrelevant, effective
//! and ineffective learning-relevant categories.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod hierarchy;
pub mod learners;

pub use error::{Error, ErrorKind, Result};
