//! The hierarchical execution trace and its queries.

pub(crate) mod build;
mod flow;
mod json;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::interpreter::memory::apply_flow_in_place;
use crate::interpreter::{LocationTable, MemoryError, RuntimeError};
use crate::syntax::{NodeId, NodeKind, Program, Role};

pub(crate) use build::TraceBuilder;
pub use flow::{compose_flow, op_flow, Composer, DataFlow, Effect, FlowWrite, Lifecycle};
pub use json::{outline, outline_to_json, trace_to_json, SnapshotMode};
pub use verify::{verify, Violation};

pub use crate::interpreter::{LocationId, MemorySnapshot, Place};

pub type StepId = u32;
/// Index of a primitive operation; tick `t` is the state after `t` operations.
pub type Tick = usize;

pub(crate) const CHECKPOINT_INTERVAL: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    Node(NodeKind),
    Iteration,
    LoopInit,
    LoopTest,
    LoopUpdate,
    FunctionFrame,
    Primitive,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Node(k) => write!(f, "{k}"),
            StepKind::Iteration => f.write_str("Iteration"),
            StepKind::LoopInit => f.write_str("LoopInit"),
            StepKind::LoopTest => f.write_str("LoopTest"),
            StepKind::LoopUpdate => f.write_str("LoopUpdate"),
            StepKind::FunctionFrame => f.write_str("FunctionFrame"),
            StepKind::Primitive => f.write_str("Primitive"),
        }
    }
}

impl Serialize for StepKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum OpKind {
    CreateLiteral,
    ReadIdentifier,
    WriteBinding,
    BinaryExpression,
    LogicalShortCircuit,
    UnaryExpression,
    UpdateValue,
    ReadElement,
    WriteElement,
    ReadProperty,
    CreateArray,
    CallBuiltin,
    BindArgument,
    ReturnValue,
    ConditionResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PrimitiveOp {
    pub kind: OpKind,
    pub ast_node: NodeId,
    pub tick: Tick,
    pub reads: Vec<LocationId>,
    pub effects: Vec<Effect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<bool>,
}

impl PrimitiveOp {
    pub fn writes(&self) -> impl Iterator<Item = &FlowWrite> {
        self.effects.iter().filter_map(|e| match e {
            Effect::Write(w) => Some(w),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub id: StepId,
    pub ast_node: NodeId,
    pub kind: StepKind,
    pub start_tick: Tick,
    pub end_tick: Tick,
    pub parent: Option<StepId>,
    pub children: Vec<StepId>,
    /// Tick of the single operation of a leaf.
    pub primitive: Option<Tick>,
    /// An operation performed by the parent node itself rather than by a sub-node.
    pub folded: bool,
    pub flow: DataFlow,
}

impl Step {
    pub fn is_leaf(&self) -> bool {
        self.primitive.is_some()
    }

    pub fn ticks(&self) -> std::ops::Range<Tick> {
        self.start_tick..self.end_tick
    }

    pub fn is_empty(&self) -> bool {
        self.start_tick == self.end_tick
    }
}

/// A function call as laid out in its own frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameInfo {
    pub step: StepId,
    pub call: StepId,
    pub function: NodeId,
    pub callee: Arc<str>,
    pub arguments: Vec<(Arc<str>, crate::interpreter::Value)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub return_value: Option<crate::interpreter::Value>,
    pub parent: Option<StepId>,
    pub depth: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainLink {
    pub loc: LocationId,
    /// Tick of the operation that copied the value out of `loc`.
    pub tick: Tick,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ChainOrigin {
    Create { tick: Tick },
    Cause { tick: Tick, sources: Vec<LocationId> },
}

/// How a value reached a location: the named locations it was copied through,
/// newest first, and the write that originally produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProvenanceChain {
    pub links: Vec<ChainLink>,
    pub origin: ChainOrigin,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("tick {tick} is outside 0..={total}")]
    TickOutOfRange { tick: Tick, total: Tick },
    #[error("location {0} is not live at the requested tick")]
    NotLive(LocationId),
    #[error("replay failed: {0}")]
    Replay(#[from] MemoryError),
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub(crate) program: Arc<Program>,
    pub(crate) seed: u64,
    pub(crate) steps: Vec<Step>,
    pub(crate) ops: Vec<PrimitiveOp>,
    pub(crate) leaf_of_tick: Vec<StepId>,
    pub(crate) locations: LocationTable,
    pub(crate) checkpoints: Vec<MemorySnapshot>,
    pub(crate) frames: Vec<FrameInfo>,
    pub(crate) writes_by_loc: Vec<Vec<Tick>>,
    pub(crate) by_node: Vec<Vec<StepId>>,
    pub(crate) error: Option<RuntimeError>,
    pub(crate) live: Option<Vec<MemorySnapshot>>,
}

impl Trace {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn program_arc(&self) -> &Arc<Program> {
        &self.program
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn error(&self) -> Option<&RuntimeError> {
        self.error.as_ref()
    }

    /// Live memory before each operation and after the last, when captured.
    pub fn live_snapshots(&self) -> Option<&[MemorySnapshot]> {
        self.live.as_deref()
    }

    pub fn root(&self) -> &Step {
        &self.steps[0]
    }

    pub fn step(&self, id: StepId) -> &Step {
        &self.steps[id as usize]
    }

    pub fn get(&self, id: StepId) -> Option<&Step> {
        self.steps.get(id as usize)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn ops(&self) -> &[PrimitiveOp] {
        &self.ops
    }

    pub fn op(&self, tick: Tick) -> &PrimitiveOp {
        &self.ops[tick]
    }

    pub fn total_ops(&self) -> Tick {
        self.ops.len()
    }

    pub fn locations(&self) -> &LocationTable {
        &self.locations
    }

    /// Leaf step holding the operation at `tick`.
    pub fn leaf_at(&self, tick: Tick) -> Option<StepId> {
        self.leaf_of_tick.get(tick).copied()
    }

    pub fn primitive(&self, id: StepId) -> Option<&PrimitiveOp> {
        self.step(id).primitive.map(|t| &self.ops[t])
    }

    /// Sub-steps as a viewer sees them: folded own operations are hidden and
    /// loop iterations are flattened into their parts.
    pub fn decompose(&self, id: StepId) -> Vec<StepId> {
        let mut out = Vec::new();
        for &c in &self.step(id).children {
            let child = self.step(c);
            if child.folded {
                continue;
            }
            if child.kind == StepKind::Iteration {
                out.extend(child.children.iter().copied().filter(|g| !self.step(*g).folded));
            } else {
                out.push(c);
            }
        }
        out
    }

    /// Steps attributed to an AST node, in tick order. Iterations and folded
    /// operations are attributed to their parent node and excluded.
    pub fn steps_for_node(&self, node: NodeId) -> &[StepId] {
        self.by_node.get(node as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn ancestors(&self, id: StepId) -> impl Iterator<Item = StepId> + '_ {
        std::iter::successors(self.step(id).parent, |p| self.step(*p).parent)
    }

    /// Recorded outcome of a condition step: a loop or if test.
    pub fn condition(&self, id: StepId) -> Option<bool> {
        let step = self.step(id);
        if let Some(op) = self.primitive(id) {
            return op.condition.filter(|_| op.kind == OpKind::ConditionResult);
        }
        let last = *step.children.last()?;
        let child = self.step(last);
        if !child.folded {
            return None;
        }
        self.primitive(last).and_then(|op| op.condition)
    }

    /// Memory after the first `tick` operations.
    pub fn snapshot_at(&self, tick: Tick) -> Result<MemorySnapshot, TraceError> {
        if tick > self.ops.len() {
            return Err(TraceError::TickOutOfRange { tick, total: self.ops.len() });
        }
        let k = (tick / CHECKPOINT_INTERVAL).min(self.checkpoints.len() - 1);
        let mut snap = self.checkpoints[k].clone();
        for t in k * CHECKPOINT_INTERVAL..tick {
            let leaf = self.leaf_of_tick[t];
            apply_flow_in_place(&mut snap, &self.step(leaf).flow, &self.locations)?;
        }
        Ok(snap)
    }

    pub fn pre(&self, id: StepId) -> Result<MemorySnapshot, TraceError> {
        self.snapshot_at(self.step(id).start_tick)
    }

    pub fn post(&self, id: StepId) -> Result<MemorySnapshot, TraceError> {
        self.snapshot_at(self.step(id).end_tick)
    }

    pub fn final_snapshot(&self) -> MemorySnapshot {
        self.snapshot_at(self.ops.len()).expect("final state replays")
    }

    /// Ticks of every operation that wrote `loc`, ascending.
    pub fn writes_of(&self, loc: LocationId) -> &[Tick] {
        self.writes_by_loc.get(loc as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    fn last_write_before(&self, loc: LocationId, tick: Tick) -> Option<(Tick, &FlowWrite)> {
        let ticks = self.writes_of(loc);
        let i = ticks.partition_point(|t| *t < tick);
        let t = *ticks.get(i.checked_sub(1)?)?;
        self.ops[t].writes().filter(|w| w.loc == loc).last().map(|w| (t, w))
    }

    /// Follows single-source copies of the value held by `loc` at `tick` back to
    /// the write that created or computed it. Registers are passed through.
    pub fn provenance_chain(&self, loc: LocationId, tick: Tick) -> Result<ProvenanceChain, TraceError> {
        if !self.snapshot_at(tick)?.contains(loc) {
            return Err(TraceError::NotLive(loc));
        }
        let mut links = Vec::new();
        let (mut cur, mut t) = (loc, tick);
        loop {
            let (wt, w) = self.last_write_before(cur, t).ok_or(TraceError::NotLive(cur))?;
            if w.copy && w.provenance.len() == 1 {
                let src = w.provenance[0];
                if !self.locations.is_register(src) {
                    links.push(ChainLink { loc: src, tick: wt });
                }
                cur = src;
                t = wt;
                continue;
            }
            let origin = if w.provenance.is_empty() {
                ChainOrigin::Create { tick: wt }
            } else {
                let mut sources: Vec<LocationId> =
                    w.provenance.iter().map(|s| self.named_source(*s, wt)).collect();
                sources.sort_unstable();
                sources.dedup();
                ChainOrigin::Cause { tick: wt, sources }
            };
            return Ok(ProvenanceChain { links, origin });
        }
    }

    // Resolves a register through the copies that filled it.
    fn named_source(&self, mut loc: LocationId, mut tick: Tick) -> LocationId {
        while self.locations.is_register(loc) {
            match self.last_write_before(loc, tick) {
                Some((wt, w)) if w.copy && w.provenance.len() == 1 => {
                    loc = w.provenance[0];
                    tick = wt;
                }
                _ => break,
            }
        }
        loc
    }

    pub fn frames(&self) -> &[FrameInfo] {
        &self.frames
    }

    pub fn frame(&self, step: StepId) -> Option<&FrameInfo> {
        self.frames.iter().find(|f| f.step == step)
    }

    /// Innermost function frame enclosing `id`, excluding `id` itself.
    pub fn enclosing_frame(&self, id: StepId) -> Option<StepId> {
        self.ancestors(id).find(|a| self.step(*a).kind == StepKind::FunctionFrame)
    }

    /// Branch nodes never executed although their parent statement was: untaken
    /// if-branches and the bodies of loops that never iterated.
    pub fn stubs(&self) -> Vec<NodeId> {
        let program = &self.program;
        let mut out = Vec::new();
        for node in program.nodes() {
            let roles: &[Role] = match node.kind {
                NodeKind::IfStatement => &[Role::Consequent, Role::Alternate],
                NodeKind::ForStatement => &[Role::Body, Role::Update],
                NodeKind::WhileStatement => &[Role::Body],
                _ => continue,
            };
            if self.steps_for_node(node.id).is_empty() {
                continue;
            }
            for c in &node.children {
                if roles.contains(&c.role) && self.steps_for_node(c.node).is_empty() {
                    out.push(c.node);
                }
            }
        }
        out
    }

    /// Untaken branches of one executed if or loop step.
    pub fn stubs_of(&self, id: StepId) -> Vec<NodeId> {
        let step = self.step(id);
        let node = self.program.node(step.ast_node);
        let ran = |n: NodeId| {
            self.steps_for_node(n)
                .iter()
                .any(|s| self.ancestors(*s).any(|a| a == id))
        };
        let roles: &[Role] = match (step.kind, node.kind) {
            (StepKind::Node(NodeKind::IfStatement), _) => &[Role::Consequent, Role::Alternate],
            (StepKind::Node(NodeKind::ForStatement), _) => &[Role::Body, Role::Update],
            (StepKind::Node(NodeKind::WhileStatement), _) => &[Role::Body],
            _ => return Vec::new(),
        };
        if step.kind == StepKind::Node(NodeKind::IfStatement) {
            // Only the branch matching the recorded test outcome could have run.
            let taken = step.children.first().and_then(|t| self.condition(*t));
            let untaken = match taken {
                Some(true) => Role::Alternate,
                Some(false) => Role::Consequent,
                None => return Vec::new(),
            };
            return node.child(untaken).into_iter().collect();
        }
        node.children
            .iter()
            .filter(|c| roles.contains(&c.role) && !ran(c.node))
            .map(|c| c.node)
            .collect()
    }
}
