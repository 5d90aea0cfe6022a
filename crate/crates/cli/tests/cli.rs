use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chatlogic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chatlogic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_translate_eval() {
    let dir = tempfile::tempdir().unwrap();
    let out = chatlogic(&["gen", "--depth", "4", "--count", "3", "--seed", "11", "--pattern", "animal"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);

    let instance = dir.path().join("inst.json");
    fs::write(&instance, lines[0]).unwrap();
    let out = chatlogic(&["translate", arg(&instance)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let program = dir.path().join("p.dlp");
    fs::write(&program, stdout(&out)).unwrap();

    let out = chatlogic(&["eval", arg(&program)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "TRUE (depth 4)");
}

#[test]
fn llm_translation_with_the_mock_matches_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let instance = dir.path().join("inst.json");
    fs::write(
        &instance,
        r#"{"id":"x","facts":["Bob is poor."],"rules":["If someone is poor then they are bad."],"question":"Bob is bad?"}"#,
    )
    .unwrap();
    let oracle = chatlogic(&["translate", arg(&instance)]);
    let llm = chatlogic(&["translate", "--llm", arg(&instance)]);
    assert!(llm.status.success());
    assert_eq!(stdout(&oracle), stdout(&llm));

    let trace = chatlogic(&["translate", "--llm", "--trace", arg(&instance)]);
    let trace: serde_json::Value = serde_json::from_slice(&trace.stdout).unwrap();
    assert_eq!(trace["instance_id"], "x");
    assert_eq!(trace["outcome"]["status"], "answer");
}

#[test]
fn eval_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let program = dir.path().join("bad.dlp");
    fs::write(&program, "p(a).\nq(X) :- p(X\n? q(a).\n").unwrap();
    let out = chatlogic(&["eval", arg(&program)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("3:1:"));
}

#[test]
fn run_writes_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = chatlogic(&["run", "--sample-size", "8", "--seed", "2", "--out", arg(&run)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("| Depth=2 | Depth=3 | Depth=4 | Depth=5 | Total |"));
    for name in ["report.json", "report.md", "report.csv"] {
        assert!(run.join(name).is_file(), "{name}");
    }
    let traces = fs::read_dir(run.join("traces").join("generated-2")).unwrap().count();
    assert_eq!(traces, 8);
}

#[test]
fn ablate_uses_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"backend":{"kind":"faulty-mock","fault_profile":{"syntax_fault_rate":0.4,"semantic_fault_rate":0.2,"rng_seed":3}}}"#,
    )
    .unwrap();
    let out = chatlogic(&["--config", arg(&config), "ablate", "--sample-size", "20", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let runs = report["runs"].as_array().unwrap();
    let names: Vec<&str> = runs.iter().map(|r| r["ablation"].as_str().unwrap()).collect();
    assert_eq!(names, ["base", "se", "se-syn"]);
    assert_eq!(report["metadata"]["backend"], "faulty-mock");
}

#[test]
fn bad_arguments_fail_cleanly() {
    assert!(!chatlogic(&["gen", "--depth", "9"]).status.success());
    assert!(!chatlogic(&["run", "--ablation", "everything"]).status.success());
    let out = chatlogic(&["run", "--dataset", "pararule-plus", "--path", "/nonexistent"]);
    assert_eq!(out.status.code(), Some(2));
}
