//! Core engine for multi-level program execution views.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`syntax`] parses a JavaScript subset into an arena AST with preorder ids.
//! 2. [`interpreter`] executes that AST on a register/stack-frame memory model
//!    and records every primitive operation with its reads and writes.
//! 3. [`trace`] groups those operations into a hierarchy of steps mirroring the
//!    syntax tree and composes data flow at every level.
//! 4. [`abstraction`] and [`dataview`] derive what a viewer sees at a chosen
//!    level of detail: visible steps, dots, frames, animations and residuals.

pub mod abstraction;
pub mod dataview;
pub mod fuzz;
pub mod interpreter;
pub mod syntax;
pub mod trace;

pub use abstraction::{Action, Cursor, Policy, ViewError, ViewState, VisibleStep};
pub use dataview::{AnimationEvent, EventKind, Keyframe};
pub use interpreter::{execute, ExecConfig, RuntimeError, RuntimeErrorKind, Value};
pub use syntax::{node_at, parse, NodeId, NodeKind, ParseError, Program, SourceSpan};
pub use trace::{DataFlow, LocationId, MemorySnapshot, Step, StepId, StepKind, Trace};
