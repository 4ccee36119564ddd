use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cv::{EvalReport, Section, SectionName, Summary};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    TextTable,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "text" | "text_table" | "table" => Ok(ReportFormat::TextTable),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!(
                "unknown report format `{other}` (expected one of json, text, csv)"
            ))),
        }
    }
}

pub fn render_report(r: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(r),
        ReportFormat::TextTable => {
            let mut out = String::new();
            for (i, s) in r.sections.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&render_table(&[r], s.name));
            }
            out
        }
    }
}

/// Three decimals without the leading zero, `-` when undefined.
pub fn format_metric(v: Option<f64>) -> String {
    match v {
        None => "-".to_string(),
        Some(x) => {
            let s = format!("{x:.3}");
            match s.strip_prefix("0.") {
                Some(rest) => format!(".{rest}"),
                None => s,
            }
        }
    }
}

fn title(name: SectionName) -> &'static str {
    match name {
        SectionName::Relevance => "Identification of Learning-Relevant Questions",
        _ => "Identification of Ineffective Learning-Relevant Questions",
    }
}

fn caption(r: &EvalReport, name: SectionName) -> String {
    let what = match name {
        SectionName::Leaf => "leaf labels",
        SectionName::Relevance => "relevance level",
        SectionName::EfficacyGoldRelevant => "efficacy level, gold-relevant questions",
        SectionName::EfficacyPredictedRelevant => "efficacy level, predicted-relevant questions",
    };
    format!("{} strategy, {what} ({}-fold, pooled)", r.strategy.as_str(), r.metadata.k)
}

/// One row per report for the given section, best F-Measure first.
/// Reports lacking the section are skipped.
pub fn render_table(reports: &[&EvalReport], section: SectionName) -> String {
    let mut rows: Vec<(&EvalReport, &Section)> = reports
        .iter()
        .filter_map(|r| r.section(section).map(|s| (*r, s)))
        .collect();
    rows.sort_by(|a, b| {
        let fa = a.1.headline().f1.unwrap_or(f64::NEG_INFINITY);
        let fb = b.1.headline().f1.unwrap_or(f64::NEG_INFINITY);
        fb.total_cmp(&fa)
    });

    let mut cells: Vec<[String; 5]> = vec![[
        "Algorithm".into(),
        "Accuracy".into(),
        "Recall".into(),
        "Precision".into(),
        "F-Measure".into(),
    ]];
    for (r, s) in &rows {
        let m = s.headline();
        cells.push([
            r.learner_label(),
            format_metric(s.pooled.accuracy),
            format_metric(m.recall),
            format_metric(m.precision),
            format_metric(m.f1),
        ]);
    }
    let mut widths = [0usize; 5];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }

    let mut out = String::new();
    if let Some((r, _)) = rows.first() {
        let _ = writeln!(out, "{}", caption(r, section));
    }
    let _ = writeln!(out, "{}", title(section));
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    if let Some((_, s)) = rows.first() {
        let _ = writeln!(out, "{}", footnote(s));
    }
    out
}

fn footnote(s: &Section) -> String {
    let cm = &s.pooled.confusion;
    let mut parts = vec![format!("Number of questions: {}", cm.total())];
    for (i, l) in cm.labels.iter().enumerate() {
        parts.push(format!("{l}: {}", cm.support(i)));
    }
    if let Some(intr) = &s.intruders {
        parts.push(format!("gold-irrelevant intruders: {}", intr.pooled));
    }
    parts.join(", ")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summary_rows(w: &mut csv::Writer<Vec<u8>>, section: &str, scope: &str, s: &Summary) {
    let mut row = |kind: &str, label: &str, predicted: &str, value: String| {
        w.write_record([section, scope, kind, label, predicted, &value])
            .expect("in-memory csv write");
    };
    for (i, gold) in s.confusion.labels.iter().enumerate() {
        for (j, pred) in s.confusion.labels.iter().enumerate() {
            row("confusion", gold, pred, s.confusion.counts[i][j].to_string());
        }
    }
    row("accuracy", "", "", opt(s.accuracy));
    row("majority_baseline", "", "", opt(s.majority_baseline));
    for m in &s.per_label {
        row("precision", &m.positive, "", opt(m.precision));
        row("recall", &m.positive, "", opt(m.recall));
        row("f1", &m.positive, "", opt(m.f1));
        row("support", &m.positive, "", m.support.to_string());
    }
}

/// Long format: one value per line. Undefined metrics are empty cells.
fn render_csv(r: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["section", "scope", "kind", "label", "predicted", "value"];
    w.write_record(header).expect("in-memory csv write");
    let meta = [
        ("report_version", r.report_version.to_string()),
        ("strategy", r.strategy.as_str().to_string()),
        ("learners", r.learner_label()),
        ("seed", r.metadata.seed.to_string()),
        ("k", r.metadata.k.to_string()),
        ("corpus_digest", r.metadata.corpus_digest.clone()),
        ("config_digest", r.metadata.config_digest.clone()),
        ("labeled_questions", r.metadata.labeled_questions.to_string()),
    ];
    for (k, v) in meta {
        w.write_record(["", "report", k, "", "", &v]).expect("in-memory csv write");
    }
    for (f, n) in r.level2_invocations.iter().enumerate() {
        let scope = format!("fold_{f}");
        w.write_record(["", &scope, "level2_invocations", "", "", &n.to_string()])
            .expect("in-memory csv write");
    }
    for s in &r.sections {
        let name = s.name.as_str();
        summary_rows(&mut w, name, "pooled", &s.pooled);
        for (f, fold) in s.folds.iter().enumerate() {
            summary_rows(&mut w, name, &format!("fold_{f}"), fold);
        }
        if let Some(intr) = &s.intruders {
            w.write_record([name, "pooled", "intruders", "", "", &intr.pooled.to_string()])
                .expect("in-memory csv write");
            for (f, n) in intr.per_fold.iter().enumerate() {
                let scope = format!("fold_{f}");
                w.write_record([name, &scope, "intruders", "", "", &n.to_string()])
                    .expect("in-memory csv write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
}
