//! Tree-walking interpreter over a register and stack-frame memory model.
//!
//! Every expression result lives in a fresh register; bindings live in frame
//! slots; each array element has its own location. Each primitive operation
//! records the locations it read and the effects it had, and operations are
//! grouped into steps following the syntax tree.

mod builtins;
mod machine;
pub mod memory;
mod value;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{NodeId, Program, SourceSpan};
use crate::trace::{Tick, Trace};

pub use builtins::{call_builtin, Rng};
pub use memory::{
    apply_flow, apply_writes, BindingView, Cell, FrameView, LocationId, LocationTable, MemoryError,
    MemorySnapshot, Place, GLOBAL_FRAME,
};
pub use value::{js_number_to_string, HeapId, Value};

pub const DEFAULT_MAX_OPS: usize = 100_000;
/// Nested user function calls allowed before the run is cut off.
pub const MAX_CALL_DEPTH: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecConfig {
    pub seed: u64,
    pub max_ops: usize,
    /// Keep the live memory before every operation (and after the last) for checking replay.
    pub capture_snapshots: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig { seed: 0, max_ops: DEFAULT_MAX_OPS, capture_snapshots: false }
    }
}

impl ExecConfig {
    pub fn with_seed(seed: u64) -> Self {
        ExecConfig { seed, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RuntimeErrorKind {
    UndefinedVariable,
    NotAFunction,
    IndexOutOfBounds,
    NotAnArray,
    BudgetExceeded,
    BadArgument,
}

#[derive(Clone, Debug, Error, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
#[error("{kind:?}: {message}")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub message: String,
    pub ast_node: NodeId,
    pub tick: Tick,
    pub span: SourceSpan,
}

/// A run that stopped on a runtime error; the trace covers everything before it.
#[derive(Debug)]
pub struct Aborted {
    pub trace: Trace,
    pub error: RuntimeError,
}

impl Aborted {
    pub fn into_trace(self) -> Trace {
        self.trace
    }
}

const STACK_SIZE: usize = 512 * 1024 * 1024;

/// Runs `program` to completion, or until a runtime error or the operation budget stops it.
pub fn execute(program: &Program, config: &ExecConfig) -> Result<Trace, Box<Aborted>> {
    let program = Arc::new(program.clone());
    let trace = std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("interpreter".into())
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, || machine::run(program, config))
            .expect("spawn interpreter thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p))
    });
    match trace.error.clone() {
        None => Ok(trace),
        Some(error) => Err(Box::new(Aborted { trace, error })),
    }
}

/// Like [`execute`] but keeps the trace in both outcomes.
pub fn execute_lenient(program: &Program, config: &ExecConfig) -> Trace {
    match execute(program, config) {
        Ok(t) => t,
        Err(a) => a.trace,
    }
}
