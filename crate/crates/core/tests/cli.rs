use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CASE: &str = "What is the most expensive MCC for a transaction of 5 euros, in general?";

fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(path)
}

fn sgkr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgkr"))
        .args(args)
        .env_remove("SGKR_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build_fees(dir: &Path) -> PathBuf {
    let graph = dir.join("graph.json");
    let o = sgkr(&["build", "--manifest", s(&fixture("fees/manifest.json")), "--out", s(&graph)]);
    assert!(o.status.success(), "{}", stderr(&o));
    graph
}

#[test]
fn build_reports_summary_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("graph.json");
    let o = sgkr(&["build", "--manifest", s(&fixture("fees/manifest.json")), "--out", s(&graph)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("12 kc-nodes"), "{text}");
    assert!(text.contains("merged duplicates: 1"));
    assert!(text.contains("call cycles: 0"));
    assert!(stderr(&o).is_empty());

    let first = std::fs::read(&graph).unwrap();
    let o = sgkr(&["build", "--manifest", s(&fixture("fees/manifest.json")), "--out", s(&graph)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&graph).unwrap(), first);
}

#[test]
fn build_missing_manifest_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = sgkr(&["build", "--manifest", "/no/such/manifest.json", "--out", s(&dir.path().join("g.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing file"));
}

#[test]
fn build_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, r#"{"corpus_name": "empty", "version": "0", "entries": []}"#).unwrap();
    let graph = dir.path().join("g.json");
    let o = sgkr(&["build", "--manifest", s(&manifest), "--out", s(&graph)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 kc-nodes"));
    let g = sgkr::graph::deserialize(&std::fs::read_to_string(&graph).unwrap()).unwrap();
    assert!(g.is_empty());
    let o = sgkr(&["inspect", "--graph", s(&graph)]);
    assert_eq!(stdout(&o), "kc-nodes (0):\nio-nodes (0):\nedges (0):\n");
}

#[test]
fn query_case_question() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_fees(dir.path());
    let aliases = fixture("fees/aliases.json");
    let o = sgkr(&["query", "--graph", s(&graph), "--aliases", s(&aliases), "--question", CASE]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.matches("```python").count(), 5);
    for name in ["rule_applies", "find_all_mccs", "sum_fee", "most_expensive", "compute_fee"] {
        assert!(text.contains(&format!("[{name}]")), "{name}");
    }

    let o = sgkr(&[
        "query", "--graph", s(&graph), "--aliases", s(&aliases), "--question", CASE, "--format", "structured",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["fallback"], false);
    assert_eq!(v["context"]["code_examples"].as_array().unwrap().len(), 5);
}

#[test]
fn query_fallback_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_fees(dir.path());
    let o = sgkr(&["query", "--graph", s(&graph), "--question", "colorless green ideas sleep furiously"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "FALLBACK\n");
    assert!(stderr(&o).is_empty());

    let o = sgkr(&["query", "--graph", s(&graph), "--question", "zzz", "--format", "structured"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["fallback"], true);
    assert!(v["context"]["knowledge_texts"].as_array().unwrap().is_empty());
}

#[test]
fn query_depth_limit_notes_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_fees(dir.path());
    let o = sgkr(&[
        "query", "--graph", s(&graph), "--aliases", s(&fixture("fees/aliases.json")),
        "--question", CASE, "--max-depth", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("no dependency paths found\n"), "{text}");
    assert!(text.contains("--max-depth 1"));
}

#[test]
fn query_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_fees(dir.path());
    let out = dir.path().join("ctx.txt");
    let aliases = fixture("fees/aliases.json");
    let args = ["query", "--graph", s(&graph), "--aliases", s(&aliases), "--question", CASE];
    let direct = sgkr(&args);
    let o = sgkr(&[&args[..], &["--out", s(&out)]].concat());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);
}

#[test]
fn query_missing_graph_fails() {
    let o = sgkr(&["query", "--graph", "/no/graph.json", "--question", "q"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: cannot read graph"));
}

#[test]
fn eval_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_fees(dir.path());
    let gold = fixture("fees/gold.json");
    let aliases = fixture("fees/aliases.json");
    let o = sgkr(&[
        "eval", "--graph", s(&graph), "--aliases", s(&aliases), "--gold", s(&gold), "--methods", "sgkr,lexical",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1], "sgkr        1.0000     1.0000     1.0000       5.00");
    assert!(lines[2].starts_with("lexical "));

    let report = dir.path().join("report.json");
    let o = sgkr(&[
        "eval", "--graph", s(&graph), "--aliases", s(&aliases), "--gold", s(&gold),
        "--methods", "lexical,vectors", "--vectors", s(&fixture("fees/vectors.json")),
        "--k", "2", "--out", s(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["k"], 2);
    for e in v["evaluations"].as_array().unwrap() {
        assert_eq!(e["aggregate"]["avg_nodes"], 2.0);
    }
}

#[test]
fn eval_rejects_bad_gold() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_fees(dir.path());
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "[]").unwrap();
    let o = sgkr(&["eval", "--graph", s(&graph), "--gold", s(&empty)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no questions"));

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"[{"question": "q", "needed": ["nope"]}]"#).unwrap();
    let o = sgkr(&["eval", "--graph", s(&graph), "--gold", s(&unknown)]);
    assert_eq!(o.status.code(), Some(1));

    let o = sgkr(&["eval", "--graph", s(&graph), "--gold", s(&fixture("fees/gold.json")), "--methods", "vectors"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--vectors"));
}

#[test]
fn inspect_listing_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_fees(dir.path());
    let o = sgkr(&["inspect", "--graph", s(&graph)]);
    let text = stdout(&o);
    assert!(text.starts_with("kc-nodes (12):\n"));
    assert!(text.contains("io-nodes (6):"));
    assert!(text.contains("input::mcc"));

    let o = sgkr(&["inspect", "--graph", s(&graph), "--dot"]);
    assert!(stdout(&o).starts_with("digraph sgkr {"));

    let o = sgkr(&["inspect", "--graph", s(&graph), "--format", "structured"]);
    assert_eq!(o.stdout, std::fs::read(&graph).unwrap());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(sgkr(&["inspect", "--bogus"]).status.code(), Some(2));
    assert_eq!(sgkr(&["query"]).status.code(), Some(2));
    assert_eq!(sgkr(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    build_fees(dir.path());
    let config = dir.path().join("sgkr.json");
    let aliases = fixture("fees/aliases.json");
    std::fs::write(
        &config,
        serde_json::json!({"graph": "graph.json", "aliases": s(&aliases), "max_depth": 1}).to_string(),
    )
    .unwrap();

    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_sgkr"))
            .args(["query", "--question", CASE])
            .args(extra)
            .env("SGKR_CONFIG", &config)
            .output()
            .unwrap()
    };
    let o = run(&[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("no dependency paths found"));
    let o = run(&["--max-depth", "16"]);
    assert_eq!(stdout(&o).matches("```python").count(), 5);

    std::fs::write(&config, r#"{"grpah": "x"}"#).unwrap();
    let o = run(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grpah"));
}
