#![allow(dead_code)]

use std::sync::Arc;

use crosstrace_core::{execute, parse, ExecConfig, Trace};

pub const CORPUS: [&str; 6] = ["sorted_insert", "fibonacci", "reverse", "quick_sort", "merge_sort", "binary_search"];

pub fn corpus_source(name: &str) -> String {
    let path = format!("{}/../../corpus/{name}.js", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn run(src: &str) -> Arc<Trace> {
    let program = parse(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    Arc::new(execute(&program, &ExecConfig::default()).unwrap_or_else(|a| panic!("{}", a.error)))
}

pub fn run_checked(src: &str) -> Arc<Trace> {
    let program = parse(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let cfg = ExecConfig { capture_snapshots: true, ..ExecConfig::default() };
    Arc::new(execute(&program, &cfg).unwrap_or_else(|a| panic!("{}", a.error)))
}
