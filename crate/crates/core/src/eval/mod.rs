//! Confusion matrices, per-label metrics, cross-validation and reports.

mod cv;
mod metrics;
mod report;

pub use cv::*;
pub use metrics::*;
pub use report::*;
