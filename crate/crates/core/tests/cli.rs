use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use qtriage::corpus::{gen_synthetic, Leaf, SyntheticSpec};
use qtriage::eval::{cross_validate, CvConfig, EvalReport, SectionName, StrategySpec};
use qtriage::learners::LearnerKind;
use serde_json::Value;
use tempfile::TempDir;

fn qtriage(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtriage"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let last = err.lines().last().expect("an error line");
    serde_json::from_str(last).expect("stderr is JSON")
}

fn corpus(dir: &TempDir, spec: &SyntheticSpec, seed: u64) -> PathBuf {
    let p = dir.path().join("corpus.jsonl");
    gen_synthetic(spec, seed).unwrap().write_jsonl(&p).unwrap();
    p
}

#[test]
fn train_reports_perfect_self_test_on_separable_data() {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir, &SyntheticSpec::with_counts(30, 30, 30), 1);
    let o = qtriage(
        &["train", "--corpus", "corpus.jsonl", "--algo", "svm", "--seed", "3", "--out", "m.json", "--format", "json"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["self_test_accuracy"], 1.0);
    assert_eq!(v["label_counts"]["ineffective"], 30);
    assert!(v["vocabulary_size"].as_u64().unwrap() > 0);
    assert!(dir.path().join("m.json").exists());
}

#[test]
fn training_twice_gives_identical_digests() {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir, &SyntheticSpec::with_counts(20, 25, 30), 2);
    let digest = |out: &str| {
        let o = qtriage(
            &[
                "train", "--corpus", "corpus.jsonl", "--strategy", "single-path", "--algo", "lg,bdt", "--seed", "5",
                "--out", out, "--format", "json",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{o:?}");
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v["content_digest"].as_str().unwrap().to_string()
    };
    assert_eq!(digest("a.json"), digest("b.json"));
    let a = qtriage::cli::ModelFile::load(&dir.path().join("a.json")).unwrap();
    let b = qtriage::cli::ModelFile::load(&dir.path().join("b.json")).unwrap();
    assert_eq!(a.model, b.model);
}

#[test]
fn config_errors_exit_2_with_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir, &SyntheticSpec::with_counts(5, 5, 5), 1);
    std::fs::write(
        dir.path().join("sp.toml"),
        "strategy = \"single-path\"\nalgo_level1 = \"nbm\"\nseed = 1\n[paths]\ncorpus = \"corpus.jsonl\"\nmodel = \"m.json\"\n",
    )
    .unwrap();
    let o = qtriage(&["train", "--config", "sp.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("algo_level2"));

    let o = qtriage(&["crossval", "--corpus", "corpus.jsonl", "--algo", "rf", "--seed", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr_json(&o)["message"].as_str().unwrap().to_string();
    for name in ["nbm", "lg", "svm", "bdt"] {
        assert!(msg.contains(name), "{msg}");
    }

    let o = qtriage(&["crossval", "--corpus", "corpus.jsonl", "--algo", "nbm"], dir.path());
    assert_eq!(o.status.code(), Some(2), "seed is required");
    let o = qtriage(&["crossval", "--corpus", "corpus.jsonl", "--algo", "nbm", "--seed", "1", "--folds", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn data_and_training_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.jsonl"), "{\"id\":\"a\",\"text\":\"x\"}\n{oops\n").unwrap();
    let o = qtriage(&["stats", "--corpus", "bad.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("line 2"));

    let o = qtriage(&["classify", "--model", "missing.json", "--input", "bad.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(3));

    // no irrelevant questions: single-path cannot train its first level
    corpus(&dir, &SyntheticSpec::with_counts(0, 10, 10), 1);
    let o = qtriage(
        &["train", "--corpus", "corpus.jsonl", "--strategy", "single-path", "--algo", "nbm", "--seed", "1", "--out", "m.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"], "training");

    // too few examples of a label for the requested folds
    corpus(&dir, &SyntheticSpec::with_counts(3, 10, 10), 1);
    let o = qtriage(&["crossval", "--corpus", "corpus.jsonl", "--algo", "nbm", "--seed", "1", "--folds", "5"], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn crossval_json_matches_in_memory_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SyntheticSpec::reference_counts();
    spec.separation = 0.6;
    let path = corpus(&dir, &spec, 4);
    let o = qtriage(
        &["crossval", "--corpus", "corpus.jsonl", "--algo", "nbm", "--seed", "21", "--folds", "10", "--format", "json"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let from_cli: EvalReport = serde_json::from_str(&stdout(&o)).unwrap();

    let c = qtriage::corpus::load_corpus(&path).unwrap();
    let in_memory = cross_validate(&c, &CvConfig::new(StrategySpec::Flat { algo: LearnerKind::Nbm }, 10, 21)).unwrap();
    assert_eq!(from_cli, in_memory);

    // each fold holds floor(n/10) or ceil(n/10) of every label
    let leaf = from_cli.section(SectionName::Leaf).unwrap();
    for (i, label) in leaf.pooled.confusion.labels.iter().enumerate() {
        let n = leaf.pooled.confusion.support(i);
        let mut total = 0;
        for f in &leaf.folds {
            let s = f.confusion.support(i);
            assert!(s == n / 10 || s == n.div_ceil(10), "{label}: fold support {s} of {n}");
            total += s;
        }
        assert_eq!(total, n);
    }
    assert_eq!(leaf.pooled.confusion.total(), 983);
}

#[test]
fn crossval_text_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir, &SyntheticSpec::with_counts(20, 20, 20), 4);
    let o = qtriage(
        &["crossval", "--corpus", "corpus.jsonl", "--strategy", "single-path", "--algo", "nbm,svm", "--seed", "2", "--folds", "4", "--out", "r.json"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Identification of Learning-Relevant Questions"));
    assert!(text.contains("Identification of Ineffective Learning-Relevant Questions"));
    assert!(text.contains("NBM+SVM"));
    let written: EvalReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(written.metadata.k, 4);

    let o = qtriage(
        &["crossval", "--corpus", "corpus.jsonl", "--algo", "lg", "--seed", "2", "--folds", "4", "--format", "csv"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("section,scope,kind,label,predicted,value\n"));
}

#[test]
fn classify_streams_one_record_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let c = gen_synthetic(&SyntheticSpec::with_counts(15, 15, 15), 6).unwrap();
    c.write_jsonl(&dir.path().join("corpus.jsonl")).unwrap();
    let o = qtriage(
        &["train", "--corpus", "corpus.jsonl", "--strategy", "single-path", "--algo", "nbm", "--seed", "1", "--out", "m.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");

    let ineffective = c.questions().iter().find(|q| q.leaf() == Some(Leaf::Ineffective)).unwrap();
    let mut input = String::new();
    input.push_str(&serde_json::json!({"id": "a", "text": ineffective.text, "course": "cs61b", "gold": null}).to_string());
    input.push('\n');
    input.push_str("{\"id\": \"b\", \"text\": \"\"}\n");
    input.push_str("not json at all\n");
    input.push_str("{\"id\": \"d\"}\n");
    input.push_str("{\"id\": \"e\", \"text\": \"zzz qqq\"}\n");

    let mut child = Command::new(env!("CARGO_BIN_EXE_qtriage"))
        .current_dir(dir.path())
        .args(["classify", "--model", "m.json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let recs: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 5);
    assert_eq!(recs[0]["id"], "a");
    assert_eq!(recs[0]["leaf"], "ineffective");
    assert_eq!(recs[0]["alert"], true);
    assert_eq!(recs[0]["course"], "cs61b");
    assert!(recs[0]["gold"].is_null());
    assert_eq!(recs[0]["path_trace"][0]["level"], "relevance");
    assert_eq!(recs[0]["path_trace"][1]["level"], "efficacy");
    assert!(recs[0]["scores"]["efficacy"]["ineffective"].is_number());
    for r in [&recs[1], &recs[4]] {
        assert!(r["leaf"].is_string());
        assert_eq!(r["alert"], r["leaf"] == "ineffective");
    }
    assert_eq!(recs[2]["line"], 3);
    assert!(recs[2]["error"].is_string());
    assert!(recs[3]["error"].as_str().unwrap().contains("text"));
}

#[test]
fn classify_large_input_to_file() {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir, &SyntheticSpec::with_counts(10, 10, 10), 1);
    assert!(qtriage(&["train", "--corpus", "corpus.jsonl", "--algo", "nbm", "--seed", "1", "--out", "m.json"], dir.path())
        .status
        .success());
    let mut big = String::new();
    for i in 0..20_000 {
        big.push_str(&format!("{{\"id\":\"x{i}\",\"text\":\"eff{} ine{} shr{}\"}}\n", i % 50, i % 7, i % 3));
    }
    std::fs::write(dir.path().join("big.jsonl"), big).unwrap();
    let o = qtriage(&["classify", "--model", "m.json", "--input", "big.jsonl", "--out", "out.jsonl"], dir.path());
    assert!(o.status.success());
    let out = std::fs::read_to_string(dir.path().join("out.jsonl")).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 20_000);
    assert!(lines[19_999].contains("\"id\":\"x19999\""));
}

#[test]
fn stats_prints_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    corpus(&dir, &SyntheticSpec::reference_counts(), 7);
    let o = qtriage(&["stats", "--corpus", "corpus.jsonl"], dir.path());
    assert!(o.status.success());
    let t = stdout(&o);
    for line in ["total        983", "irrelevant   240", "relevant     743", "effective    366", "ineffective  377"] {
        assert!(t.contains(line), "{t}");
    }
    let o = qtriage(&["stats", "--corpus", "corpus.jsonl", "--format", "json"], dir.path());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["relevant"], 743);
}

#[test]
fn kappa_command() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("same.csv"),
        "id,label_a,label_b\n1,effective,effective\n2,ineffective,ineffective\n3,irrelevant,irrelevant\n",
    )
    .unwrap();
    let o = qtriage(&["kappa", "--input", "same.csv"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1.000\n");

    // 2x2 agreement table [[2,1],[1,2]]: p_o = 4/6, p_e = 1/2, kappa = 1/3
    std::fs::write(
        dir.path().join("mixed.csv"),
        "id,label_a,label_b\n1,effective,effective\n2,effective,effective\n3,effective,ineffective\n4,ineffective,effective\n5,ineffective,ineffective\n6,ineffective,ineffective\n",
    )
    .unwrap();
    let o = qtriage(&["kappa", "--input", "mixed.csv"], dir.path());
    assert_eq!(stdout(&o), "0.333\n");

    std::fs::write(dir.path().join("bad.csv"), "id,label_a,label_b\n1,effective,great\n").unwrap();
    let o = qtriage(&["kappa", "--input", "bad.csv"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn gen_synthetic_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        let o = qtriage(&["gen-synthetic", "--seed", "42", "--irrelevant", "12", "--out", name], dir.path());
        assert!(o.status.success(), "{o:?}");
    }
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.jsonl")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 12 + 366 + 377);
    let o = qtriage(&["gen-synthetic", "--seed", "1", "--separation", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
