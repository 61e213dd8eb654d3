//! Shared inputs for the benchmarks.

use crosstrace_core::fuzz::{program_with, GenConfig};

/// Corpus programs by name.
pub fn corpus() -> Vec<(&'static str, String)> {
    ["sorted_insert", "fibonacci", "reverse", "quick_sort", "merge_sort", "binary_search"]
        .into_iter()
        .map(|name| {
            let path = format!("{}/../../corpus/{name}.js", env!("CARGO_MANIFEST_DIR"));
            (name, std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")))
        })
        .collect()
}

/// A loop running close to `ops` primitive operations.
pub fn counting_loop(ops: usize) -> String {
    // Each iteration costs about 11 operations.
    format!("let s = 0;\nfor (let i = 0; i < {}; i++) {{\n  s = s + i % 7;\n}}\n", ops / 11)
}

/// Naive recursion `depth` calls deep.
pub fn recursion(depth: usize) -> String {
    format!("function down(n) {{\n  if (n === 0) {{ return 0; }}\n  return 1 + down(n - 1);\n}}\nlet d = down({depth});\n")
}

/// A larger generated program.
pub fn generated(seed: u64) -> String {
    program_with(seed, GenConfig { statements: 40, block_statements: 4, max_depth: 3, max_loop_bound: 8, functions: 3 })
}
