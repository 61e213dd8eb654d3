mod common;

use crosstrace_core::fuzz;
use crosstrace_core::interpreter::{execute, ExecConfig};
use crosstrace_core::parse;
use crosstrace_core::trace::verify;

#[test]
fn generated_programs_keep_invariants() {
    let cfg = ExecConfig { capture_snapshots: true, ..ExecConfig::default() };
    for seed in 0..150 {
        let src = fuzz::program(seed);
        let program = parse(&src).unwrap();
        let t = match execute(&program, &cfg) {
            Ok(t) => t,
            Err(a) => a.trace,
        };
        if let Err(v) = verify(&t) {
            panic!("seed {seed}: {v}\n{src}");
        }
    }
}
