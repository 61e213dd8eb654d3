use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crosstrace"))
}

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{name}.js", env!("CARGO_MANIFEST_DIR"))
}

fn with_stdin(mut cmd: Command, input: &str) -> Output {
    let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn exit_codes() {
    let ok = bin().args(["trace", &corpus("fibonacci"), "--format", "json"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(v["totalOps"].as_u64().unwrap() > 0);

    let mut c = bin();
    c.args(["trace", "-", "--format", "json"]);
    let bad = with_stdin(c, "let x = ;");
    assert_eq!(bad.status.code(), Some(1));
    let e: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(e["error"]["kind"], "ParseError");

    let mut c = bin();
    c.args(["trace", "-", "--format", "json"]);
    let failed = with_stdin(c, "let a = [1];\nlet b = a[5];\n");
    assert_eq!(failed.status.code(), Some(2));
    let t: serde_json::Value = serde_json::from_slice(&failed.stdout).unwrap();
    assert_eq!(t["error"]["kind"], "IndexOutOfBounds");

    let mut c = bin();
    c.args(["trace", "-", "--max-ops", "50"]);
    assert_eq!(with_stdin(c, "while (true) {}").status.code(), Some(2));
}

#[test]
fn parse_prints_ast() {
    let mut c = bin();
    c.args(["parse", "-", "--ast", "--format", "json"]);
    let out = with_stdin(c, "let x = 1;");
    assert!(out.status.success());
    let ast: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(ast["kind"], "Program");
    assert_eq!(ast["span"]["endOffset"], 10);
    let mut c = bin();
    c.args(["parse", "-", "--ast"]);
    let text = String::from_utf8(with_stdin(c, "let x = 1;").stdout).unwrap();
    assert!(text.contains("VariableDeclaration"));
}

#[test]
fn outline_depth() {
    let out = bin().args(["outline", &corpus("reverse"), "--depth", "1"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 2);
    assert!(text.lines().all(|l| !l.starts_with("    ")));
    let out = bin().args(["outline", &corpus("reverse"), "--depth", "0", "--format", "json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["children"].as_array().unwrap().len(), 0);
}

#[test]
fn navigate_repl() {
    let mut c = bin();
    c.arg("navigate");
    let src = "let s = 0;\nfor (let i = 0; i < 7; i++) {\n  s = s + i;\n}\n";
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("loop.js");
    std::fs::write(&file, src).unwrap();
    c.arg(&file);
    c.args(["--format", "json"]);
    let out = with_stdin(c, "next 2\nexpand 1\nbogus\nlog\nquit\nnext\n");
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[1]["cursor"]["tick"], 4);
    assert!(lines[2]["error"].is_object() || lines[2]["visibleSteps"].is_array());
    assert_eq!(lines[3]["error"]["kind"], "InvalidAction");
    assert!(lines[4].is_array());
}

#[test]
fn trace_is_deterministic() {
    let run = || bin().args(["trace", &corpus("quick_sort"), "--format", "json", "--seed", "9"]).output().unwrap().stdout;
    let first = run();
    assert!(!first.is_empty());
    for _ in 0..3 {
        assert!(run() == first);
    }
}
