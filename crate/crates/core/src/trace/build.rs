use std::sync::Arc;

use super::{
    compose_flow, op_flow, DataFlow, Effect, FrameInfo, OpKind, PrimitiveOp, Step, StepId, StepKind,
    Tick, Trace, CHECKPOINT_INTERVAL,
};
use crate::interpreter::{LocationId, LocationTable, MemorySnapshot, Place, RuntimeError, Value};
use crate::syntax::{NodeId, Program, Role};

/// How an emitted operation appears in the step tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Leaf {
    /// A leaf step of its own with the given kind.
    Step(StepKind),
    /// An own operation of the enclosing step, hidden from decomposition.
    Folded,
}

#[derive(Debug)]
struct Draft {
    ast_node: NodeId,
    kind: StepKind,
    start_tick: Tick,
    end_tick: Tick,
    parent: Option<usize>,
    children: Vec<usize>,
    primitive: Option<Tick>,
    folded: bool,
}

#[derive(Debug)]
struct FrameDraft {
    draft: usize,
    call: usize,
    function: NodeId,
    callee: Arc<str>,
    arguments: Vec<(Arc<str>, Value)>,
    return_value: Option<Value>,
    parent: Option<usize>,
    depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BudgetExceeded;

/// Records operations and step structure while applying effects to live memory.
pub(crate) struct TraceBuilder {
    program: Arc<Program>,
    seed: u64,
    max_ops: usize,
    drafts: Vec<Draft>,
    open: Vec<usize>,
    ops: Vec<PrimitiveOp>,
    mem: MemorySnapshot,
    locations: LocationTable,
    checkpoints: Vec<MemorySnapshot>,
    captured: Option<Vec<MemorySnapshot>>,
    pending_reads: Vec<LocationId>,
    pending_effects: Vec<Effect>,
    frames: Vec<FrameDraft>,
}

impl TraceBuilder {
    pub(crate) fn new(program: Arc<Program>, seed: u64, max_ops: usize, capture: bool) -> Self {
        let mut b = TraceBuilder {
            program,
            seed,
            max_ops,
            drafts: Vec::new(),
            open: Vec::new(),
            ops: Vec::new(),
            mem: MemorySnapshot::default(),
            locations: LocationTable::default(),
            checkpoints: Vec::new(),
            captured: capture.then(Vec::new),
            pending_reads: Vec::new(),
            pending_effects: Vec::new(),
            frames: Vec::new(),
        };
        b.open(StepKind::Node(crate::syntax::NodeKind::Program), 0);
        b
    }

    pub(crate) fn value(&self, loc: LocationId) -> &Value {
        self.mem.value(loc).expect("live location")
    }

    pub(crate) fn alloc(&mut self, place: Place) -> LocationId {
        self.locations.alloc(place)
    }

    pub(crate) fn tick(&self) -> Tick {
        self.ops.len()
    }

    pub(crate) fn open(&mut self, kind: StepKind, ast_node: NodeId) -> usize {
        let id = self.drafts.len();
        let parent = self.open.last().copied();
        self.drafts.push(Draft {
            ast_node,
            kind,
            start_tick: self.ops.len(),
            end_tick: self.ops.len(),
            parent,
            children: Vec::new(),
            primitive: None,
            folded: false,
        });
        if let Some(p) = parent {
            self.drafts[p].children.push(id);
        }
        self.open.push(id);
        id
    }

    /// Closes the innermost open step. A step whose only content is one folded
    /// operation becomes a leaf holding that operation.
    pub(crate) fn close(&mut self) {
        let id = self.open.pop().expect("open step");
        let end = self.ops.len();
        let d = &mut self.drafts[id];
        d.end_tick = end;
        if let [only] = d.children[..] {
            let c = &self.drafts[only];
            if c.folded && c.primitive.is_some() {
                let tick = c.primitive;
                let d = &mut self.drafts[id];
                d.children.clear();
                d.primitive = tick;
            }
        }
    }

    pub(crate) fn close_all(&mut self) {
        while !self.open.is_empty() {
            self.close();
        }
    }

    pub(crate) fn current(&self) -> usize {
        *self.open.last().expect("open step")
    }

    /// Moves the most recently closed child of the current step into a new
    /// step of `kind`, left open.
    pub(crate) fn wrap_last_child(&mut self, kind: StepKind, ast_node: NodeId) {
        let parent = *self.open.last().expect("open step");
        let last = self.drafts[parent].children.pop().expect("child to wrap");
        let id = self.drafts.len();
        self.drafts.push(Draft {
            ast_node,
            kind,
            start_tick: self.drafts[last].start_tick,
            end_tick: self.ops.len(),
            parent: Some(parent),
            children: vec![last],
            primitive: None,
            folded: false,
        });
        self.drafts[last].parent = Some(id);
        self.drafts[parent].children.push(id);
        self.open.push(id);
    }

    /// Effects and reads attached to the next emitted operation.
    pub(crate) fn defer(&mut self, reads: &[LocationId], effects: Vec<Effect>) {
        self.pending_reads.extend_from_slice(reads);
        self.pending_effects.extend(effects);
    }

    pub(crate) fn has_pending(&self) -> bool {
        !self.pending_reads.is_empty() || !self.pending_effects.is_empty()
    }

    pub(crate) fn emit(
        &mut self,
        kind: OpKind,
        ast_node: NodeId,
        reads: Vec<LocationId>,
        effects: Vec<Effect>,
        leaf: Leaf,
        condition: Option<bool>,
    ) -> Result<Tick, BudgetExceeded> {
        if self.ops.len() >= self.max_ops {
            return Err(BudgetExceeded);
        }
        let tick = self.ops.len();
        if tick.is_multiple_of(CHECKPOINT_INTERVAL) {
            self.checkpoints.push(self.mem.clone());
        }
        if let Some(c) = &mut self.captured {
            c.push(self.mem.clone());
        }
        let mut all_reads = std::mem::take(&mut self.pending_reads);
        all_reads.extend(reads);
        let mut all_effects = std::mem::take(&mut self.pending_effects);
        all_effects.extend(effects);
        for e in &all_effects {
            self.apply(e);
        }
        self.ops.push(PrimitiveOp {
            kind,
            ast_node,
            tick,
            reads: all_reads,
            effects: all_effects,
            condition,
        });
        let (step_kind, folded) = match leaf {
            Leaf::Step(k) => (k, false),
            Leaf::Folded => (StepKind::Primitive, true),
        };
        let id = self.drafts.len();
        let parent = self.open.last().copied();
        self.drafts.push(Draft {
            ast_node,
            kind: step_kind,
            start_tick: tick,
            end_tick: tick + 1,
            parent,
            children: Vec::new(),
            primitive: Some(tick),
            folded,
        });
        if let Some(p) = parent {
            self.drafts[p].children.push(id);
        }
        Ok(tick)
    }

    /// Adds an effect to the most recent operation, e.g. releasing a consumed
    /// register or popping a scope.
    pub(crate) fn append(&mut self, effect: Effect) {
        self.apply(&effect);
        self.ops.last_mut().expect("an operation to extend").effects.push(effect);
    }

    fn apply(&mut self, e: &Effect) {
        let r = match e {
            Effect::PushFrame { name } => {
                self.mem.push_frame(name.clone());
                Ok(())
            }
            Effect::PopFrame => self.mem.pop_frame(),
            Effect::AllocArray { heap } => {
                self.mem.alloc_array(*heap);
                Ok(())
            }
            Effect::Write(w) => self.mem.write(w, &self.locations),
            Effect::Free { loc } => self.mem.free(*loc),
        };
        if let Err(err) = r {
            panic!("inconsistent effect {e:?}: {err}");
        }
    }

    pub(crate) fn begin_frame(
        &mut self,
        call: usize,
        function: NodeId,
        callee: Arc<str>,
        parent: Option<usize>,
        depth: u32,
    ) -> usize {
        let draft = self.open(StepKind::FunctionFrame, function);
        self.frames.push(FrameDraft {
            draft,
            call,
            function,
            callee,
            arguments: Vec::new(),
            return_value: None,
            parent,
            depth,
        });
        draft
    }

    fn frame_mut(&mut self, draft: usize) -> &mut FrameDraft {
        self.frames.iter_mut().rev().find(|f| f.draft == draft).expect("frame")
    }

    pub(crate) fn frame_argument(&mut self, draft: usize, name: Arc<str>, value: Value) {
        self.frame_mut(draft).arguments.push((name, value));
    }

    pub(crate) fn frame_return(&mut self, draft: usize, value: Value) {
        self.frame_mut(draft).return_value = Some(value);
    }

    pub(crate) fn finish(mut self, error: Option<RuntimeError>) -> Trace {
        self.close_all();
        if self.checkpoints.is_empty() || self.ops.len().is_multiple_of(CHECKPOINT_INTERVAL) {
            self.checkpoints.push(self.mem.clone());
        }
        let mut captured = self.captured.take();
        if let Some(c) = &mut captured {
            c.push(self.mem.clone());
        }

        // Renumber in preorder.
        let mut order = Vec::with_capacity(self.drafts.len());
        let mut stack = vec![0usize];
        while let Some(d) = stack.pop() {
            order.push(d);
            stack.extend(self.drafts[d].children.iter().rev());
        }
        let mut new_id = vec![u32::MAX; self.drafts.len()];
        for (i, d) in order.iter().enumerate() {
            new_id[*d] = i as StepId;
        }
        let mut steps: Vec<Step> = order
            .iter()
            .map(|&d| {
                let dr = &self.drafts[d];
                Step {
                    id: new_id[d],
                    ast_node: dr.ast_node,
                    kind: dr.kind,
                    start_tick: dr.start_tick,
                    end_tick: dr.end_tick,
                    parent: dr.parent.map(|p| new_id[p]),
                    children: dr.children.iter().map(|c| new_id[*c]).collect(),
                    primitive: dr.primitive,
                    folded: dr.folded,
                    flow: DataFlow::default(),
                }
            })
            .collect();

        for i in (0..steps.len()).rev() {
            let flow = match steps[i].primitive {
                Some(t) => op_flow(&self.ops[t].reads, &self.ops[t].effects),
                None => compose_flow(steps[i].children.iter().map(|c| &steps[*c as usize].flow)),
            };
            steps[i].flow = flow;
        }

        let mut leaf_of_tick = vec![0; self.ops.len()];
        let mut by_node: Vec<Vec<StepId>> = vec![Vec::new(); self.program.len()];
        for s in &steps {
            if let Some(t) = s.primitive {
                leaf_of_tick[t] = s.id;
            }
            if s.folded || s.kind == StepKind::Iteration {
                continue;
            }
            by_node[s.ast_node as usize].push(s.id);
            if s.kind == StepKind::FunctionFrame {
                if let Some(body) = self.program.node(s.ast_node).child(Role::Body) {
                    by_node[body as usize].push(s.id);
                }
            }
        }

        let mut writes_by_loc: Vec<Vec<Tick>> = vec![Vec::new(); self.locations.len()];
        for op in &self.ops {
            for w in op.writes() {
                let v = &mut writes_by_loc[w.loc as usize];
                if v.last() != Some(&op.tick) {
                    v.push(op.tick);
                }
            }
        }

        let frames = self
            .frames
            .into_iter()
            .map(|f| FrameInfo {
                step: new_id[f.draft],
                call: new_id[f.call],
                function: f.function,
                callee: f.callee,
                arguments: f.arguments,
                return_value: f.return_value,
                parent: f.parent.map(|p| new_id[p]),
                depth: f.depth,
            })
            .collect();

        Trace {
            program: self.program,
            seed: self.seed,
            steps,
            ops: self.ops,
            leaf_of_tick,
            locations: self.locations,
            checkpoints: self.checkpoints,
            frames,
            writes_by_loc,
            by_node,
            error,
            live: captured,
        }
    }
}
