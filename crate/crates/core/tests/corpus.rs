mod common;

use std::time::{Duration, Instant};

use common::{corpus_source, run, run_checked, CORPUS};
use crosstrace_core::dataview::classify_step;
use crosstrace_core::trace::{trace_to_json, verify, SnapshotMode};
use serde_json::json;

// Final globals printed by node 20 for each corpus file.
fn oracle(name: &str) -> serde_json::Value {
    match name {
        "sorted_insert" => json!({"nums": [1, 3, 4, 5, 7, 9]}),
        "fibonacci" => json!({"result": 55}),
        "reverse" => json!({"items": [6, 5, 4, 3, 2, 1]}),
        "quick_sort" => json!({"sorted": [1, 2, 3, 5, 7, 8, 9]}),
        "merge_sort" => json!({"sorted": [3, 9, 10, 27, 38, 43, 82]}),
        "binary_search" => json!({"data": [2, 5, 8, 12, 16, 23, 38, 56, 72, 91], "found": 5, "missing": -1}),
        _ => unreachable!(),
    }
}

fn observed(name: &str, globals: serde_json::Map<String, serde_json::Value>) -> serde_json::Value {
    let keys: Vec<String> = oracle(name).as_object().unwrap().keys().cloned().collect();
    json!(globals.into_iter().filter(|(k, _)| keys.contains(k)).collect::<serde_json::Map<_, _>>())
}

#[test]
fn final_states_match_engine() {
    for name in CORPUS {
        let src = corpus_source(name);
        let started = Instant::now();
        let t = run(&src);
        let elapsed = started.elapsed();
        assert!(elapsed < Duration::from_secs(2), "{name} took {elapsed:?}");
        assert!(t.total_ops() < 100_000, "{name} used {} ops", t.total_ops());
        assert_eq!(observed(name, t.final_snapshot().plain_globals()), oracle(name), "{name}");
    }
}

#[test]
fn corpus_traces_pass_invariants() {
    for name in CORPUS {
        let t = run_checked(&corpus_source(name));
        verify(&t).unwrap_or_else(|v| panic!("{name}: {v}"));
    }
}

#[test]
fn classification_covers_every_write() {
    for name in CORPUS {
        let t = run(&corpus_source(name));
        for s in t.steps() {
            assert_eq!(classify_step(&t, s.id).len(), s.flow.writes.len(), "{name} step {}", s.id);
        }
    }
}

#[test]
fn trace_json_is_stable() {
    for name in CORPUS {
        let src = corpus_source(name);
        let first = serde_json::to_string(&trace_to_json(&run(&src), SnapshotMode::None)).unwrap();
        for _ in 0..3 {
            let again = serde_json::to_string(&trace_to_json(&run(&src), SnapshotMode::None)).unwrap();
            assert!(again == first, "{name} trace JSON changed between runs");
        }
    }
}
