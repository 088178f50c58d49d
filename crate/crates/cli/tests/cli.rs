use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn llema(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llema"))
        .args(args)
        .env_remove("LLEMA_LLM_API_KEY")
        .env_remove("LLEMA_LLM_BASE_URL")
        .env_remove("LLEMA_MP_API_KEY")
        .env_remove("LLEMA_MP_BASE_URL")
        .env_remove("LLEMA_SURROGATE_URL")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn diagnostic(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("a diagnostic line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {line}"))
}

fn run_in(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--task", "hard_coating", "--out", out, "--iterations", "6", "--islands", "2"];
    args.extend_from_slice(extra);
    llema(&args)
}

fn records(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("candidates.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["candidates.jsonl", "pools.json", "summary.json", "trace.csv", "pareto.csv", "coverage.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("records, hit rate"), "{stdout}");
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["task"], "hard_coating");
    assert_eq!(summary["records"].as_u64().unwrap() as usize, records(dir.path()).len());

    let pareto = fs::read_to_string(dir.path().join("pareto.csv")).unwrap();
    let formulas: Vec<&str> = pareto.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    let unique: std::collections::BTreeSet<_> = formulas.iter().collect();
    assert_eq!(unique.len(), formulas.len());
}

#[test]
fn same_seed_gives_identical_records() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(code(&run_in(a.path(), &["--seed", "11"])), 0);
    assert_eq!(code(&run_in(b.path(), &["--seed", "11"])), 0);
    let read = |d: &Path| fs::read(d.join("candidates.jsonl")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let read = |d: &Path| fs::read(d.join("summary.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn existing_output_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &[])), 0);
    let again = run_in(dir.path(), &[]);
    assert_eq!(code(&again), 2);
    assert_eq!(diagnostic(&again)["code"], "OutputExists");
    assert_eq!(code(&run_in(dir.path(), &["--force"])), 0);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["run", "--task", "no_such_task", "--out", out], "UnknownTask"),
        (&["run", "--task", "wide_bandgap", "--out", out, "--generator", "replay:/nonexistent.jsonl"], "ReplayFile"),
        (&["run", "--task", "wide_bandgap", "--out", out, "--generator", "oracle"], "InvalidGenerator"),
        (&["run", "--task", "wide_bandgap", "--out", out, "--islands", "0"], "InvalidConfig"),
        (&["run", "--out", out], "MissingOption"),
    ];
    for (args, expected) in cases {
        let o = llema(args);
        assert_eq!(code(&o), 2, "{args:?}");
        let d = diagnostic(&o);
        assert_eq!(d["code"], expected, "{args:?}");
        assert_eq!(d["exit"], 2);
        assert_eq!(d["level"], "error");
    }
    let usage = llema(&["run", "--no-such-flag"]);
    assert_eq!(code(&usage), 2);
    assert_eq!(diagnostic(&usage)["code"], "Usage");
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn llm_without_credentials() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--generator", "llm"]);
    assert_eq!(code(&o), 3);
    assert_eq!(diagnostic(&o)["code"], "GeneratorUnavailable");

    let o = run_in(dir.path(), &["--generator", "llm", "--fallback-rules"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(records(dir.path()).iter().all(|r| r["generator"] != "llm"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("campaign.toml");
    let out = dir.path().join("out");
    fs::write(
        &config,
        format!("task = \"hard_coating\"\niterations = 3\nislands = 1\nbatch = 1\nout = {:?}\n", out.to_str().unwrap()),
    )
    .unwrap();
    let o = llema(&["run", "--config", config.to_str().unwrap(), "--iterations", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&out);
    let generated: Vec<&Value> = recs.iter().filter(|r| r["generator"] != "seed").collect();
    assert_eq!(generated.iter().map(|r| r["iteration"].as_u64().unwrap()).max(), Some(4));
    assert!(generated.iter().all(|r| r["island"] == 0));

    fs::write(&config, "task = \"hard_coating\"\nbogus = 1\n").unwrap();
    let o = llema(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["code"], "ConfigFile");
}

#[test]
fn score_known_structure() {
    let o = llema(&["score", fixture("BaTiO3.cif").to_str().unwrap(), "--task", "high_k_dielectric"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["formula"], "BaTiO3");
    assert_eq!(v["task"], "high_k_dielectric");
    assert_eq!(v["properties"]["band_gap"]["source"], "reference");
    assert_eq!(v["properties"]["density"]["source"], "derived");
    assert!(v["score"]["composite"].is_f64());
}

#[test]
fn score_unknown_structure_is_missing() {
    let dir = tempfile::tempdir().unwrap();
    let cif = fs::read_to_string(fixture("BaTiO3.cif")).unwrap().replace("Ba", "Cs");
    let path = dir.path().join("CsTiO3.cif");
    fs::write(&path, cif).unwrap();
    let o = llema(&["score", path.to_str().unwrap(), "--task", "wide_bandgap"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["formula"], "CsTiO3");
    assert_eq!(v["properties"]["band_gap"]["source"], "missing");
    assert_eq!(v["score"]["success"], false);
    let phis = v["score"]["per_constraint_phi"].as_array().unwrap();
    let gap = phis.iter().find(|p| p["constraint"].as_str().unwrap().contains("band_gap")).unwrap();
    assert_eq!(gap["phi"], -1.0);
}

#[test]
fn score_malformed_cif() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cif");
    fs::write(&path, "data_bad\n_cell_length_a 4.0\n").unwrap();
    let o = llema(&["score", path.to_str().unwrap(), "--task", "wide_bandgap"]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["exit"], 2);
    let missing = llema(&["score", "/nonexistent.cif", "--task", "wide_bandgap"]);
    assert_eq!(code(&missing), 2);
    assert_eq!(diagnostic(&missing)["code"], "CifFile");
}

#[test]
fn report_reproduces_summary_and_rewindows() {
    let dir = tempfile::tempdir().unwrap();
    let o = llema(&[
        "run", "--task", "hard_coating", "--out", dir.path().to_str().unwrap(), "--iterations", "50", "--islands", "2",
    ]);
    assert_eq!(code(&o), 0);
    let stream = dir.path().join("candidates.jsonl");
    let original = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let o = llema(&["report", stream.to_str().unwrap(), "--task", "hard_coating"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), original);
    assert_eq!(fs::read_to_string(dir.path().join("summary.json")).unwrap(), original);

    let other = tempfile::tempdir().unwrap();
    let o = llema(&[
        "report", stream.to_str().unwrap(), "--task", "hard_coating", "--window", "25", "--out", other.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["window"], 25);
    let windows: Vec<u64> = summary["trace"].as_array().unwrap().iter().map(|w| w["window"].as_u64().unwrap()).collect();
    assert_eq!(windows, [0, 1]);
    assert!(other.path().join("coverage.csv").is_file());
}

#[test]
fn report_without_successes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &[])), 0);
    let failures: Vec<String> = fs::read_to_string(dir.path().join("candidates.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| serde_json::from_str::<Value>(l).unwrap()["score"]["success"] == false)
        .map(str::to_string)
        .collect();
    assert!(!failures.is_empty());
    let out = tempfile::tempdir().unwrap();
    let stream = out.path().join("failures.jsonl");
    fs::write(&stream, failures.join("\n") + "\n").unwrap();
    let o = llema(&["report", stream.to_str().unwrap(), "--task", "hard_coating"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["hit_rate"], 0.0);
    assert_eq!(summary["pareto_front"], serde_json::json!([]));
    assert_eq!(fs::read_to_string(out.path().join("pareto.csv")).unwrap(), "x,y,formula,on_front\n");
}

#[test]
fn report_errors() {
    let o = llema(&["report", "/nonexistent/candidates.jsonl", "--task", "hard_coating"]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["code"], "Records");

    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("candidates.jsonl");
    fs::write(&stream, "").unwrap();
    let o = llema(&["report", stream.to_str().unwrap(), "--task", "hard_coating", "--window", "0"]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["code"], "InvalidConfig");
}
