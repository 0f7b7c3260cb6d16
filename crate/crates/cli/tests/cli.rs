use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FOUR_CYCLE: &str = r#"{"n":6,"A":[[0,0.4,0,-0.4,0,0],[0.4,0,-0.4,0,0,0],[0,-0.4,0,0.4,0,0],[-0.4,0,0.4,0,0,0],[0,0,0,0,0,0],[0,0,0,0,0,0]],"theta":[0,0,0,0,0,0]}"#;

fn mrflearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrflearn"))
        .args(args)
        .env_remove("MRFLEARN_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mrflearn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas");
    let load = |n: &str| -> Value { serde_json::from_str(&std::fs::read_to_string(dir.join(n)).unwrap()).unwrap() };
    let mut root = load(name);
    // the only cross-file reference is to the learn config; inline it
    inline_ref(&mut root, "learn-config.schema.json", &load("learn-config.schema.json"));
    jsonschema::validator_for(&root).unwrap()
}

fn inline_ref(v: &mut Value, target: &str, with: &Value) {
    match v {
        Value::Object(map) => {
            if map.get("$ref").and_then(Value::as_str) == Some(target) {
                *v = with.clone();
                return;
            }
            for child in map.values_mut() {
                inline_ref(child, target, with);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|c| inline_ref(c, target, with)),
        _ => {}
    }
}

fn assert_valid(validator: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{doc}\n{errors:?}");
}

fn gen_four_cycle(dir: &TempDir, n_samples: &str) -> PathBuf {
    let model = write(dir, "cycle.json", FOUR_CYCLE);
    let samples = dir.path().join("cycle.txt");
    ok(&["gen", "--model", s(&model), "-N", n_samples, "--seed", "4", "--out", s(&samples)]);
    samples
}

#[test]
fn gen_zero_model_writes_requested_rows() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "zero.json", r#"{"n":3,"A":[[0,0,0],[0,0,0],[0,0,0]],"theta":[0,0,0]}"#);
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let stdout = ok(&["gen", "--model", s(&model), "-N", "100", "--seed", "9", "--out", s(&a)]);
    ok(&["gen", "--model", s(&model), "-N", "100", "--seed", "9", "--out", s(&b)]);
    let text = std::fs::read_to_string(&a).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.split(' ').all(|v| v == "1" || v == "-1")));
    // the config comment differs only by the output path
    let strip = |t: &str| t.lines().filter(|l| !l.starts_with("# config")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&text), strip(&std::fs::read_to_string(&b).unwrap()));

    let summary: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_valid(&schema("gen-summary.schema.json"), &summary);
    assert_eq!(summary["delta"], 0.5);
}

#[test]
fn gen_reports_unknown_unbiasedness_when_enumeration_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let n = 30;
    let rows = vec![vec![0.0; n]; n];
    let model = serde_json::json!({ "n": n, "A": rows, "theta": vec![0.0; n] });
    let path = write(&dir, "big.json", &model.to_string());
    let out = dir.path().join("big.txt");
    let stdout = ok(&[
        "gen", "--model", s(&path), "-N", "10", "--sampler", "gibbs", "--burn-in", "5", "--out", s(&out),
    ]);
    let summary: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(summary["delta"], "n/a");
    assert_valid(&schema("gen-summary.schema.json"), &summary);
    // the exact sampler cannot run at this size
    let exact = mrflearn(&["gen", "--model", s(&path), "-N", "10"]);
    assert_eq!(exact.status.code(), Some(1));
}

#[test]
fn gen_rejects_bad_models() {
    let dir = TempDir::new().unwrap();
    let asym = write(&dir, "bad.json", r#"{"n":2,"A":[[0,1],[0,0]],"theta":[0,0]}"#);
    let out = mrflearn(&["gen", "--model", s(&asym), "-N", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
    let missing = mrflearn(&["gen", "--model", "/nonexistent/model.json", "-N", "5"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn learn_requires_lambda() {
    let dir = TempDir::new().unwrap();
    let samples = write(&dir, "s.txt", "# n=2 alphabet=pm1\n1 1\n-1 -1\n");
    let out = mrflearn(&["learn", "ising", "--samples", s(&samples)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--lambda"));
}

#[test]
fn four_cycle_pipeline_recovers_the_graph() {
    let dir = TempDir::new().unwrap();
    let samples = gen_four_cycle(&dir, "300000");
    let truth = dir.path().join("cycle.json");
    let est = dir.path().join("est.json");
    let metrics = dir.path().join("metrics.json");
    let stdout = ok(&[
        "learn", "ising", "--samples", s(&samples), "--lambda", "1", "--eta", "0.3", "--truth", s(&truth), "--out",
        s(&est), "--metrics", s(&metrics),
    ]);
    let line: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(line["metrics"]["structure"]["precision"], 1.0);
    assert_eq!(line["metrics"]["structure"]["recall"], 1.0);
    assert_eq!(line["edges"], serde_json::json!([[0, 1], [0, 3], [1, 2], [2, 3]]));

    let est_doc: Value = serde_json::from_str(&std::fs::read_to_string(&est).unwrap()).unwrap();
    assert_valid(&schema("learn-output.schema.json"), &est_doc);
    let met_doc: Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_valid(&schema("metrics.schema.json"), &met_doc);
    assert_valid(&schema("metrics.schema.json"), &line);
    assert_eq!(est_doc["config"], line["config"]);
}

#[test]
fn pairwise_mrf_task_matches_ising_task() {
    let dir = TempDir::new().unwrap();
    let samples = gen_four_cycle(&dir, "40000");
    let ising = dir.path().join("ising.json");
    let mrf = dir.path().join("mrf.json");
    ok(&["learn", "ising", "--samples", s(&samples), "--lambda", "1", "--out", s(&ising)]);
    ok(&[
        "learn", "mrf", "--samples", s(&samples), "--lambda", "1", "--t", "2", "--mode", "parameters", "--out",
        s(&mrf),
    ]);
    let ising: Value = serde_json::from_str(&std::fs::read_to_string(&ising).unwrap()).unwrap();
    let mrf: Value = serde_json::from_str(&std::fs::read_to_string(&mrf).unwrap()).unwrap();
    let raw = &ising["estimate"]["A_raw"];
    let theta = &ising["estimate"]["theta"];
    for (i, q) in mrf["estimate"]["per_vertex"].as_array().unwrap().iter().enumerate() {
        for term in q["terms"].as_array().unwrap() {
            let idx = term["indices"].as_array().unwrap();
            let c = term["coeff"].as_f64().unwrap();
            let want = match idx.as_slice() {
                [] => theta[i].as_f64().unwrap(),
                [j] => raw[i][j.as_u64().unwrap() as usize].as_f64().unwrap(),
                other => panic!("unexpected monomial {other:?}"),
            };
            assert!((c - want).abs() < 1e-9, "vertex {i} {idx:?}: {c} vs {want}");
        }
    }
}

#[test]
fn derived_budget_shortfall_names_the_requirement() {
    let dir = TempDir::new().unwrap();
    let samples = gen_four_cycle(&dir, "1000");
    let out = mrflearn(&["learn", "ising", "--samples", s(&samples), "--lambda", "1", "--budget", "derived"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("required") && err.contains("1000 available"), "{err}");
}

#[test]
fn config_file_is_overridden_by_flags_and_echoed() {
    let dir = TempDir::new().unwrap();
    let samples = gen_four_cycle(&dir, "20000");
    let cfg = write(
        &dir,
        "learn.json",
        &serde_json::json!({ "task": "ising", "samples": samples, "lambda": 1.0, "eta": 0.3, "eps": 0.2 }).to_string(),
    );
    let line: Value = serde_json::from_str(ok(&["learn", "--config", s(&cfg), "--eta", "0.5"]).trim()).unwrap();
    assert_eq!(line["config"]["eta"], 0.5);
    assert_eq!(line["config"]["eps"], 0.2);
    assert_eq!(line["config"]["rho"], 0.1);
    assert_eq!(line["config"]["lambda"], 1.0);

    let bad = write(&dir, "bad.json", r#"{"lambda":1.0,"colour":"blue"}"#);
    let out = mrflearn(&["learn", "ising", "--samples", s(&samples), "--config", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_smoke_and_usage() {
    let stdout = ok(&["verify", "--trials", "0"]);
    let validator = schema("verify-line.schema.json");
    let lines: Vec<Value> = stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    for l in &lines {
        assert_valid(&validator, l);
    }
    let summaries: Vec<&Value> = lines.iter().filter(|l| l["summary"] == true).collect();
    assert_eq!(summaries.len(), 6);
    assert!(summaries.iter().all(|l| l["pass"] == true));

    let out = mrflearn(&["verify", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_default_suites_pass_deterministically() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    ok(&["verify", "all", "--seed", "5", "--out", s(&a), "--threads", "4"]);
    ok(&["verify", "all", "--seed", "5", "--out", s(&b), "--threads", "1"]);
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap();
    let body = |t: &str| t.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&ta), body(&tb));
    let validator = schema("verify-line.schema.json");
    for l in ta.lines() {
        assert_valid(&validator, &serde_json::from_str(l).unwrap());
    }
}

fn csv_rows(text: &str) -> Vec<Value> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            let mut obj = serde_json::Map::new();
            for (k, v) in header.iter().zip(rec.iter()) {
                let parsed = v
                    .parse::<u64>()
                    .map(Value::from)
                    .or_else(|_| v.parse::<f64>().map(Value::from))
                    .unwrap_or_else(|_| Value::from(v));
                obj.insert(k.to_string(), parsed);
            }
            Value::Object(obj)
        })
        .collect()
}

const HEADER: &str = "scenario,n,t,lambda,eta,N,trials,successes,wall_ms";

#[test]
fn bench_with_no_trials_writes_only_the_header() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("b.csv");
    ok(&["bench", "--scenario", "4-cycle", "--trials", "0", "--out", s(&out)]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), format!("{HEADER}\n"));
    let mut side = out.into_os_string();
    side.push(".config.json");
    let cfg: Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    assert_valid(&schema("bench-config.schema.json"), &cfg);
}

#[test]
fn bench_single_edge_success_rate_does_not_drop_with_more_samples() {
    let text = ok(&["bench", "--scenario", "single-edge", "--grid", "1000,10000,100000", "--trials", "8", "--seed", "1"]);
    assert!(text.starts_with(HEADER));
    let rows = csv_rows(&text);
    let validator = schema("bench-row.schema.json");
    rows.iter().for_each(|r| assert_valid(&validator, r));
    let rates: Vec<u64> = rows.iter().map(|r| r["successes"].as_u64().unwrap()).collect();
    assert_eq!(rates.len(), 3);
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
    assert_eq!(rates[2], 8);
}

#[test]
fn bench_parity_needs_the_full_degree() {
    let args = |t: &'static str| ["bench", "--scenario", "parity", "--grid", "200000", "--trials", "2", "--t", t];
    let cubic = csv_rows(&ok(&args("3")));
    let pairwise = csv_rows(&ok(&args("2")));
    assert_eq!(cubic[0]["successes"], 2);
    assert_eq!(pairwise[0]["successes"], 0);
    assert_eq!(pairwise[0]["t"], 2);
}

#[test]
fn bench_is_identical_across_thread_counts() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_mrflearn"))
            .args(["bench", "--scenario", "nonbinary-edge", "--grid", "20000,50000", "--trials", "3", "--deterministic"])
            .env("MRFLEARN_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("4"));
    for r in csv_rows(&String::from_utf8(one).unwrap()) {
        assert_eq!(r["wall_ms"], 0);
    }
}

#[test]
fn bench_rejects_degree_for_pairwise_scenarios() {
    let out = mrflearn(&["bench", "--scenario", "single-edge", "--t", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = mrflearn(&["bench", "--scenario", "triangle"]);
    assert_eq!(out.status.code(), Some(2));
}
