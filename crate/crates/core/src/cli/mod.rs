//! The `qtriage` command line: argument parsing, commands and exit codes.
//!
//! Every failure ends the process with a single-line JSON object on stderr
//! and exit status 2 (config), 3 (data) or 4 (training).

mod config;
mod model_file;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::corpus::{cohen_kappa, corpus_stats, gen_synthetic, load_corpus, Corpus, LabelCounts, Leaf, SyntheticSpec};
use crate::error::{Error, ErrorKind, Result};
use crate::eval::{cross_validate, render_report, ReportFormat};
use crate::hierarchy::{StrategyModel, StrategyPrediction};

pub use config::{Overrides, Paths, RunConfig, DEFAULT_FOLDS};
pub use model_file::{ModelFile, ModelMetadata, MODEL_FORMAT_VERSION};

#[derive(Debug, Parser)]
#[command(name = "qtriage", version, about = "Triage forum questions into irrelevant, effective and ineffective")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on the full labeled corpus and write a model file.
    Train(RunArgs),
    /// Stratified k-fold cross-validation.
    Crossval(RunArgs),
    /// Label a JSONL stream of questions with a trained model.
    Classify(ClassifyArgs),
    /// Label breakdown of a corpus.
    Stats(StatsArgs),
    /// Cohen's kappa between two label columns of a CSV file.
    Kappa(KappaArgs),
    /// Write a synthetic labeled corpus.
    GenSynthetic(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// flat or single-path
    #[arg(long)]
    pub strategy: Option<String>,
    /// Learner for flat; `level1,level2` for single-path.
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// json, text or csv
    #[arg(long, default_value = "text")]
    pub format: String,
    /// Model file (train) or JSON report (crossval).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// JSONL input; `-` or absent for stdin.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// JSONL output; absent for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// CSV with header `id,label_a,label_b`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "text")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 240)]
    pub irrelevant: usize,
    #[arg(long, default_value_t = 366)]
    pub effective: usize,
    #[arg(long, default_value_t = 377)]
    pub ineffective: usize,
    #[arg(long, default_value_t = 600)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 10)]
    pub min_len: usize,
    #[arg(long, default_value_t = 40)]
    pub max_len: usize,
    /// Output file; absent for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Training => 4,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Config => "config",
        ErrorKind::Data => "data",
        ErrorKind::Training => "training",
    }
}

/// One-line JSON diagnostic for `e`.
pub fn error_line(e: &Error) -> String {
    let kind = e.kind();
    json!({
        "error": kind_name(kind),
        "exit_code": exit_code(kind),
        "message": e.to_string(),
    })
    .to_string()
}

/// Parses `args` and runs the command. Returns the process exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or(&msg)
                .trim_start_matches("error: ")
                .to_string();
            let _ = writeln!(stderr, "{}", error_line(&Error::Config(first)));
            return 2;
        }
    };
    init_logging(cli.verbose);
    match run(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_line(&e));
            exit_code(e.kind())
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // the environment is deliberately not consulted
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

pub fn run(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Train(a) => cmd_train(&a, out),
        Command::Crossval(a) => cmd_crossval(&a, out),
        Command::Classify(a) => cmd_classify(&a, out),
        Command::Stats(a) => cmd_stats(&a, out),
        Command::Kappa(a) => cmd_kappa(&a, out),
        Command::GenSynthetic(a) => cmd_gen_synthetic(&a, out),
    }
}

fn run_config(a: &RunArgs) -> Result<RunConfig> {
    let ov = Overrides {
        strategy: a.strategy.clone(),
        algo: a.algo.clone(),
        folds: a.folds,
        seed: a.seed,
        corpus: a.corpus.clone(),
    };
    RunConfig::load(a.config.as_deref(), &ov)
}

fn format_arg(s: &str) -> Result<ReportFormat> {
    s.parse()
}

pub fn cmd_train(a: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let format = format_arg(&a.format)?;
    let cfg = run_config(a)?;
    let seed = cfg.require_seed()?;
    let path = a
        .out
        .clone()
        .or_else(|| cfg.paths.model.clone())
        .ok_or_else(|| Error::Config("no model output path (--out or paths.model)".into()))?;
    let corpus = load_corpus(cfg.corpus_path()?)?;
    log::info!("training {} on {} questions", cfg.strategy.kind().as_str(), corpus.len());
    let model = cfg.strategy.train(&corpus, &cfg.pipeline, &cfg.hyperparams)?;
    let counts = corpus.counts();
    let file = ModelFile::new(model, corpus.digest(), seed, counts.labeled());
    file.save(&path)?;
    let accuracy = self_test(&file.model, &corpus)?;

    let learners: Vec<&str> = cfg.strategy.learners().iter().map(|k| k.as_str()).collect();
    let summary = json!({
        "model": path.display().to_string(),
        "strategy": cfg.strategy.kind().as_str(),
        "learners": learners,
        "seed": seed,
        "label_counts": counts,
        "vocabulary_size": file.model.pipeline.vocab.len(),
        "self_test_accuracy": accuracy,
        "content_digest": file.content_digest(),
    });
    match format {
        ReportFormat::Json => writeln!(out, "{summary}")?,
        _ => {
            writeln!(out, "model:              {}", path.display())?;
            writeln!(out, "strategy:           {} ({})", cfg.strategy.kind().as_str(), learners.join(", "))?;
            writeln!(out, "seed:               {seed}")?;
            writeln!(
                out,
                "labeled questions:  {} (irrelevant {}, effective {}, ineffective {})",
                counts.labeled(),
                counts.irrelevant,
                counts.effective,
                counts.ineffective
            )?;
            writeln!(out, "vocabulary size:    {}", file.model.pipeline.vocab.len())?;
            writeln!(out, "self-test accuracy: {accuracy:.3}")?;
            writeln!(out, "content digest:     {}", file.content_digest())?;
        }
    }
    Ok(())
}

/// Share of labeled training questions the model gets right.
fn self_test(model: &StrategyModel, c: &Corpus) -> Result<f64> {
    let labeled: Vec<_> = c.questions().iter().filter(|q| q.gold.is_some()).collect();
    let texts: Vec<&str> = labeled.iter().map(|q| q.text.as_str()).collect();
    let preds = model.predict_batch(&texts)?;
    let right = labeled
        .iter()
        .zip(&preds)
        .filter(|(q, p)| q.leaf() == Some(p.leaf))
        .count();
    Ok(right as f64 / labeled.len().max(1) as f64)
}

pub fn cmd_crossval(a: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let format = format_arg(&a.format)?;
    let cfg = run_config(a)?;
    let cv = cfg.cv_config()?;
    let corpus = load_corpus(cfg.corpus_path()?)?;
    log::info!("{}-fold cross-validation over {} questions", cv.k, corpus.len());
    let report = cross_validate(&corpus, &cv)?;
    if let Some(p) = a.out.clone().or_else(|| cfg.paths.report.clone()) {
        std::fs::write(&p, render_report(&report, ReportFormat::Json))?;
        log::info!("report written to {}", p.display());
    }
    out.write_all(render_report(&report, format).as_bytes())?;
    Ok(())
}

/// Output record for one classified question; input fields pass through.
pub fn classify_record(model: &StrategyModel, mut obj: Map<String, Value>) -> Result<Map<String, Value>> {
    let text = match obj.get("text") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(Error::Validation("record needs a string `text`".into())),
    };
    if !matches!(obj.get("id"), Some(Value::String(_))) {
        return Err(Error::Validation("record needs a string `id`".into()));
    }
    let p: StrategyPrediction = model.predict(&text)?;
    let path: Vec<Value> = p
        .trace
        .steps
        .iter()
        .map(|s| json!({"level": s.level, "label": s.label}))
        .collect();
    let mut scores = Map::new();
    for s in &p.trace.steps {
        scores.insert(serde_json::to_value(s.level)?.as_str().unwrap_or_default().to_string(), json!(s.scores));
    }
    obj.insert("leaf".into(), json!(p.leaf.as_str()));
    obj.insert("path_trace".into(), Value::Array(path));
    obj.insert("scores".into(), Value::Object(scores));
    obj.insert("alert".into(), json!(p.leaf == Leaf::Ineffective));
    Ok(obj)
}

fn classify_line(model: &StrategyModel, line: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(obj)) => classify_record(model, obj),
        Ok(_) => Err(Error::Validation("record is not a JSON object".into())),
        Err(e) => Err(Error::Validation(format!("malformed JSON: {e}"))),
    }
}

/// Streams `input` to `output`, one record per line in input order.
/// Returns (records written, error records among them).
pub fn classify_stream(model: &StrategyModel, input: impl BufRead, output: &mut dyn Write) -> Result<(usize, usize)> {
    let mut n = 0;
    let mut bad = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let rec = match classify_line(model, &line) {
            Ok(obj) => Value::Object(obj),
            Err(e) => {
                bad += 1;
                log::warn!("line {}: {e}", i + 1);
                json!({"line": i + 1, "error": e.to_string()})
            }
        };
        serde_json::to_writer(&mut *output, &rec)?;
        output.write_all(b"\n")?;
        n += 1;
    }
    output.flush()?;
    Ok((n, bad))
}

pub fn cmd_classify(a: &ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let model = ModelFile::load(&a.model)?.model;
    let input: Box<dyn BufRead> = match a.input.as_deref() {
        None => Box::new(BufReader::new(io::stdin())),
        Some(p) if p == Path::new("-") => Box::new(BufReader::new(io::stdin())),
        Some(p) => Box::new(BufReader::new(File::open(p)?)),
    };
    let (n, bad) = match &a.out {
        Some(p) => classify_stream(&model, input, &mut BufWriter::new(File::create(p)?))?,
        None => classify_stream(&model, input, &mut BufWriter::new(out))?,
    };
    log::info!("classified {n} records ({bad} errors)");
    Ok(())
}

pub fn render_stats(s: &LabelCounts) -> String {
    format!(
        "total        {}\nirrelevant   {}\nrelevant     {}\n  effective    {}\n  ineffective  {}\nunlabeled    {}\n",
        s.total, s.irrelevant, s.relevant, s.effective, s.ineffective, s.unlabeled
    )
}

pub fn cmd_stats(a: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let format = format_arg(&a.format)?;
    let path = match (&a.corpus, &a.config) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => RunConfig::load(Some(c), &Overrides { algo: Some("nbm".into()), ..Default::default() })
            .map(|cfg| cfg.paths.corpus)?
            .ok_or_else(|| Error::Config("config has no paths.corpus".into()))?,
        (None, None) => return Err(Error::Config("stats needs --corpus".into())),
    };
    let s = corpus_stats(&load_corpus(&path)?);
    match format {
        ReportFormat::Json => writeln!(out, "{}", serde_json::to_string(&s)?)?,
        ReportFormat::Csv => {
            writeln!(out, "label,count")?;
            for (k, v) in [
                ("total", s.total),
                ("irrelevant", s.irrelevant),
                ("relevant", s.relevant),
                ("effective", s.effective),
                ("ineffective", s.ineffective),
                ("unlabeled", s.unlabeled),
            ] {
                writeln!(out, "{k},{v}")?;
            }
        }
        ReportFormat::TextTable => out.write_all(render_stats(&s).as_bytes())?,
    }
    Ok(())
}

/// Reads `id,label_a,label_b` rows; labels must be leaf names.
pub fn read_rater_csv(path: &Path) -> Result<(Vec<Leaf>, Vec<Leaf>)> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let headers = rd.headers().map_err(|e| Error::Validation(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Validation(format!("CSV lacks a `{name}` column")))
    };
    let (ia, ib) = (col("label_a")?, col("label_b")?);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let parse = |j: usize| -> Result<Leaf> {
            rec.get(j)
                .unwrap_or("")
                .parse()
                .map_err(|e: Error| Error::Parse { line, message: e.to_string() })
        };
        a.push(parse(ia)?);
        b.push(parse(ib)?);
    }
    Ok((a, b))
}

pub fn cmd_kappa(a: &KappaArgs, out: &mut dyn Write) -> Result<()> {
    let format = format_arg(&a.format)?;
    let (x, y) = read_rater_csv(&a.input)?;
    let k = cohen_kappa(&x, &y)?;
    match format {
        ReportFormat::Json => writeln!(out, "{}", json!({"kappa": k, "items": x.len()}))?,
        _ => writeln!(out, "{k:.3}")?,
    }
    Ok(())
}

pub fn cmd_gen_synthetic(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let spec = SyntheticSpec {
        irrelevant: a.irrelevant,
        effective: a.effective,
        ineffective: a.ineffective,
        vocab_size: a.vocab_size,
        separation: a.separation,
        min_len: a.min_len,
        max_len: a.max_len,
    };
    let c = gen_synthetic(&spec, a.seed).map_err(|e| match e {
        Error::Argument(m) => Error::Config(m),
        other => other,
    })?;
    match &a.out {
        Some(p) => c.write_jsonl(p)?,
        None => out.write_all(c.to_jsonl().as_bytes())?,
    }
    Ok(())
}
