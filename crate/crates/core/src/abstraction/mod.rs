//! Navigation state over a trace: which steps are expanded, compact,
//! abbreviated or unrolled, where the cursor is, and how the view reacts to
//! each user action.

mod render;
#[cfg(test)]
mod tests;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

pub use render::{landmark, linearize, LinearEntry, Presentation, RenderKind, VisibleStep};

use crate::syntax::{node_at, NodeId, NodeKind};
use crate::trace::{StepId, StepKind, Tick, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Policy {
    /// Abbreviate loops and show only the tail of function bodies.
    pub disclosure: bool,
}

impl Default for Policy {
    fn default() -> Self {
        Policy { disclosure: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cursor {
    pub tick: Tick,
    pub fraction: f64,
}

impl Cursor {
    pub fn at(tick: Tick) -> Self {
        Cursor { tick, fraction: 0.0 }
    }

    pub fn position(&self) -> f64 {
        self.tick as f64 + self.fraction
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CursorTarget {
    StepEnd {
        #[serde(rename = "stepEnd")]
        step_end: StepId,
    },
    Tick {
        tick: Tick,
        #[serde(default)]
        fraction: f64,
    },
    Delta {
        delta: i64,
    },
}

/// The action vocabulary shared by the REPL and the HTTP service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Action {
    Expand { step_id: StepId },
    Collapse { step_id: StepId },
    ToggleGroup { group_id: StepId },
    ToggleCompact { step_id: StepId },
    Unroll { step_id: StepId },
    MoveCursor(CursorTarget),
    SelectSource { start_offset: usize, end_offset: usize },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ViewError {
    #[error("step {0} does not exist")]
    UnknownStep(StepId),
    #[error("step {0} is not visible")]
    NotVisible(StepId),
    #[error("step {0} has no sub-steps")]
    NotDecomposable(StepId),
    #[error("step {0} is already expanded")]
    AlreadyExpanded(StepId),
    #[error("step {0} is not expanded")]
    NotExpanded(StepId),
    #[error("step {0} is not a loop")]
    NotALoop(StepId),
    #[error("step {0} is not a function frame")]
    NotAFrame(StepId),
    #[error("no visible dot group starts at step {0}")]
    UnknownGroup(StepId),
    #[error("tick {tick} is outside 0..={total}")]
    OutOfRange { tick: Tick, total: Tick },
    #[error("fraction {0} is outside [0, 1)")]
    BadFraction(f64),
    #[error("span {start}..{end} is outside the source of length {len}")]
    InvalidSpan { start: usize, end: usize, len: usize },
}

impl ViewError {
    pub fn kind(&self) -> &'static str {
        match self {
            ViewError::UnknownStep(_) => "UnknownStep",
            ViewError::NotVisible(_) => "NotVisible",
            ViewError::NotDecomposable(_) => "NotDecomposable",
            ViewError::AlreadyExpanded(_) => "AlreadyExpanded",
            ViewError::NotExpanded(_) => "NotExpanded",
            ViewError::NotALoop(_) => "NotALoop",
            ViewError::NotAFrame(_) => "NotAFrame",
            ViewError::UnknownGroup(_) => "UnknownGroup",
            ViewError::OutOfRange { .. } | ViewError::BadFraction(_) => "OutOfRange",
            ViewError::InvalidSpan { .. } => "InvalidSpan",
        }
    }
}

/// Where the global cursor lies relative to a function frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "state")]
pub enum FrameCursor {
    Before,
    During {
        #[serde(rename = "localTick")]
        local_tick: Tick,
    },
    After,
}

#[derive(Clone, Debug)]
pub struct ViewState {
    trace: Arc<Trace>,
    policy: Policy,
    expanded: BTreeSet<StepId>,
    history: Vec<StepId>,
    compact: BTreeSet<StepId>,
    unroll_toggled: BTreeSet<StepId>,
    open_groups: BTreeSet<StepId>,
    cursor: Cursor,
    log: Vec<Action>,
    tree: VisibleStep,
}

impl ViewState {
    /// Root expanded one level. With disclosure, loops among the shown steps
    /// open with their first iteration expanded.
    pub fn initial(trace: Arc<Trace>, policy: Policy) -> Self {
        let tree = VisibleStep {
            step_id: None,
            group_id: None,
            steps: Vec::new(),
            ast_node: 0,
            kind: None,
            render_kind: RenderKind::Full,
            presentation: Presentation::Collapsed,
            start_tick: 0,
            end_tick: 0,
            landmark: String::new(),
            frame_depth: None,
            children: Vec::new(),
        };
        let mut v = ViewState {
            trace,
            policy,
            expanded: BTreeSet::new(),
            history: Vec::new(),
            compact: BTreeSet::new(),
            unroll_toggled: BTreeSet::new(),
            open_groups: BTreeSet::new(),
            cursor: Cursor::at(0),
            log: Vec::new(),
            tree,
        };
        if !v.trace.decompose(0).is_empty() {
            v.expanded.insert(0);
            v.auto_open(0);
        }
        v.rerender();
        v
    }

    /// Rebuilds a view by applying a recorded action log to a fresh initial view.
    pub fn replay(trace: Arc<Trace>, policy: Policy, log: &[Action]) -> Result<Self, (usize, ViewError)> {
        let mut v = ViewState::initial(trace, policy);
        for (i, a) in log.iter().enumerate() {
            v.apply(a).map_err(|e| (i, e))?;
        }
        Ok(v)
    }

    pub fn trace(&self) -> &Arc<Trace> {
        &self.trace
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn cursor(&self) -> Cursor {
        self.cursor
    }

    pub fn log(&self) -> &[Action] {
        &self.log
    }

    pub fn expansion_history(&self) -> &[StepId] {
        &self.history
    }

    pub fn visible(&self) -> &VisibleStep {
        &self.tree
    }

    pub fn linearize(&self) -> Vec<LinearEntry> {
        linearize(&self.tree, self.trace.total_ops())
    }

    /// Presentation of a visible step; `None` when the step is not drawn on its own.
    pub fn presentation(&self, step: StepId) -> Option<Presentation> {
        self.tree.find(step).map(|e| e.presentation)
    }

    /// Applies one action. On error the view is left untouched. Returns the
    /// matching steps for `selectSource` and nothing otherwise.
    pub fn apply(&mut self, action: &Action) -> Result<Vec<StepId>, ViewError> {
        let mut next = self.clone();
        let targets = next.apply_inner(action)?;
        next.rerender();
        next.log.push(action.clone());
        *self = next;
        Ok(targets)
    }

    pub fn expand(&mut self, step: StepId) -> Result<(), ViewError> {
        self.apply(&Action::Expand { step_id: step }).map(drop)
    }

    pub fn collapse(&mut self, step: StepId) -> Result<(), ViewError> {
        self.apply(&Action::Collapse { step_id: step }).map(drop)
    }

    pub fn toggle_group(&mut self, group: StepId) -> Result<(), ViewError> {
        self.apply(&Action::ToggleGroup { group_id: group }).map(drop)
    }

    pub fn toggle_compact(&mut self, step: StepId) -> Result<(), ViewError> {
        self.apply(&Action::ToggleCompact { step_id: step }).map(drop)
    }

    pub fn toggle_unroll(&mut self, step: StepId) -> Result<(), ViewError> {
        self.apply(&Action::Unroll { step_id: step }).map(drop)
    }

    pub fn move_cursor(&mut self, target: CursorTarget) -> Result<(), ViewError> {
        self.apply(&Action::MoveCursor(target)).map(drop)
    }

    pub fn select_source(&mut self, start: usize, end: usize) -> Result<Vec<StepId>, ViewError> {
        self.apply(&Action::SelectSource { start_offset: start, end_offset: end })
    }

    fn apply_inner(&mut self, action: &Action) -> Result<Vec<StepId>, ViewError> {
        match *action {
            Action::Expand { step_id } => {
                self.check_step(step_id)?;
                let entry = self.tree.find(step_id).ok_or(ViewError::NotVisible(step_id))?;
                if self.trace.decompose(step_id).is_empty() {
                    return Err(ViewError::NotDecomposable(step_id));
                }
                if !entry.children.is_empty() && entry.presentation != Presentation::Abbreviated {
                    return Err(ViewError::AlreadyExpanded(step_id));
                }
                self.open(step_id);
            }
            Action::Collapse { step_id } => {
                self.check_step(step_id)?;
                if !self.expanded.contains(&step_id) {
                    return Err(ViewError::NotExpanded(step_id));
                }
                if self.tree.find(step_id).is_none() {
                    return Err(ViewError::NotVisible(step_id));
                }
                let last = render::subtree_end(&self.trace, step_id);
                let inside = |x: &StepId| (step_id..=last).contains(x);
                self.expanded.retain(|x| !inside(x));
                self.history.retain(|x| !inside(x));
                let below = |x: &StepId| (step_id + 1..=last).contains(x);
                self.compact.retain(|x| !below(x));
                self.unroll_toggled.retain(|x| !below(x));
                self.open_groups.retain(|x| !below(x));
            }
            Action::ToggleGroup { group_id } => {
                if self.tree.find_group(group_id).is_none() {
                    return Err(ViewError::UnknownGroup(group_id));
                }
                toggle(&mut self.open_groups, group_id);
            }
            Action::ToggleCompact { step_id } => {
                self.check_step(step_id)?;
                self.tree.find(step_id).ok_or(ViewError::NotVisible(step_id))?;
                toggle(&mut self.compact, step_id);
            }
            Action::Unroll { step_id } => {
                self.check_step(step_id)?;
                if !is_loop(self.trace.step(step_id).kind) {
                    return Err(ViewError::NotALoop(step_id));
                }
                self.tree.find(step_id).ok_or(ViewError::NotVisible(step_id))?;
                toggle(&mut self.unroll_toggled, step_id);
            }
            Action::MoveCursor(target) => self.cursor = self.resolve(target)?,
            Action::SelectSource { start_offset, end_offset } => {
                return self.select(start_offset, end_offset);
            }
        }
        Ok(Vec::new())
    }

    fn check_step(&self, s: StepId) -> Result<(), ViewError> {
        self.trace.get(s).map(drop).ok_or(ViewError::UnknownStep(s))
    }

    /// Expands `s`, or brings an already expanded `s` back to full detail.
    fn open(&mut self, s: StepId) {
        let fresh = self.expanded.insert(s);
        self.history.retain(|x| *x != s);
        self.history.push(s);
        if fresh {
            self.auto_open(s);
        }
    }

    fn auto_open(&mut self, s: StepId) {
        if !self.policy.disclosure {
            return;
        }
        for c in self.trace.decompose(s) {
            if is_loop(self.trace.step(c).kind) && !self.trace.decompose(c).is_empty() {
                self.expanded.insert(c);
                if let Some(first) = self.iterations(c).first() {
                    self.expanded.insert(*first);
                }
            }
        }
    }

    fn iterations(&self, loop_step: StepId) -> Vec<StepId> {
        self.trace
            .step(loop_step)
            .children
            .iter()
            .copied()
            .filter(|c| self.trace.step(*c).kind == StepKind::Iteration)
            .collect()
    }

    fn is_unrolled(&self, loop_step: StepId) -> bool {
        self.unroll_toggled.contains(&loop_step) != !self.policy.disclosure
    }

    /// Index of the iteration shown in detail: the most recently expanded
    /// one, else the first if it is expanded.
    fn open_iteration(&self, iterations: &[StepId]) -> Option<usize> {
        let latest = self
            .history
            .iter()
            .rev()
            .find_map(|h| iterations.iter().position(|i| i == h));
        latest.or_else(|| {
            iterations
                .first()
                .filter(|i| self.expanded.contains(i))
                .map(|_| 0)
        })
    }

    /// Expansion history without iterations superseded by a later expansion
    /// of another iteration of the same loop.
    fn effective_history(&self) -> Vec<StepId> {
        let t = &self.trace;
        let mut out = Vec::with_capacity(self.history.len());
        for (i, &h) in self.history.iter().enumerate() {
            let step = t.step(h);
            if step.kind == StepKind::Iteration {
                let superseded = self.history[i + 1..].iter().any(|later| {
                    let l = t.step(*later);
                    l.kind == StepKind::Iteration && l.parent == step.parent
                });
                if superseded {
                    continue;
                }
            }
            out.push(h);
        }
        out
    }

    fn rerender(&mut self) {
        self.tree = render::Renderer::new(self).render();
    }

    fn boundaries(&self) -> Vec<Tick> {
        let lin = self.linearize();
        let mut b: Vec<Tick> = lin.iter().map(|e| e.start).collect();
        b.push(self.trace.total_ops());
        b.dedup();
        b
    }

    fn resolve(&self, target: CursorTarget) -> Result<Cursor, ViewError> {
        let total = self.trace.total_ops();
        match target {
            CursorTarget::StepEnd { step_end } => {
                self.check_step(step_end)?;
                Ok(Cursor::at(self.trace.step(step_end).end_tick))
            }
            CursorTarget::Tick { tick, fraction } => {
                if tick > total {
                    return Err(ViewError::OutOfRange { tick, total });
                }
                if !(0.0..1.0).contains(&fraction) || (tick == total && fraction != 0.0) {
                    return Err(ViewError::BadFraction(fraction));
                }
                Ok(Cursor { tick, fraction })
            }
            CursorTarget::Delta { delta } => {
                let b = self.boundaries();
                let p = self.cursor.position();
                let n = delta.unsigned_abs() as usize;
                let tick = if delta >= 0 {
                    let from = b.partition_point(|x| (*x as f64) <= p);
                    match n {
                        0 => return Ok(self.cursor),
                        _ => b.get(from + n - 1).copied().unwrap_or(total),
                    }
                } else {
                    let before = b.partition_point(|x| (*x as f64) < p);
                    before.checked_sub(n).map_or(0, |i| b[i])
                };
                Ok(Cursor::at(tick))
            }
        }
    }

    fn select(&mut self, start: usize, end: usize) -> Result<Vec<StepId>, ViewError> {
        let program = self.trace.program();
        let len = program.source().len();
        if start > end || end > len {
            return Err(ViewError::InvalidSpan { start, end, len });
        }
        let node = node_at(program, start, end).id;
        let mut targets = self.trace.steps_for_node(node).to_vec();
        targets.sort_by_key(|s| (self.trace.step(*s).start_tick, *s));
        let Some(&first) = targets.first() else {
            return Ok(targets);
        };
        self.reveal(first);
        self.cursor = Cursor::at(self.trace.step(first).end_tick);
        Ok(targets)
    }

    /// Opens the fewest ancestors needed for `s` to be drawn on its own.
    fn reveal(&mut self, s: StepId) {
        let mut chain: Vec<StepId> = self.trace.ancestors(s).collect();
        chain.reverse();
        for a in chain {
            let open = self
                .tree
                .find(a)
                .is_some_and(|e| !e.children.is_empty() && e.presentation != Presentation::Abbreviated);
            if !open {
                self.open(a);
                self.rerender();
            }
        }
        if self.tree.find(s).is_none() {
            let group = self
                .tree
                .walk()
                .into_iter()
                .find(|e| e.group_id.is_some() && e.steps.contains(&s))
                .and_then(|e| e.group_id);
            if let Some(g) = group {
                self.open_groups.insert(g);
            }
        }
    }

    pub fn frame_cursor_state(&self, frame: StepId) -> Result<FrameCursor, ViewError> {
        let f = self.trace.get(frame).ok_or(ViewError::UnknownStep(frame))?;
        if f.kind != StepKind::FunctionFrame {
            return Err(ViewError::NotAFrame(frame));
        }
        let t = self.cursor.tick;
        Ok(if t < f.start_tick {
            FrameCursor::Before
        } else if t < f.end_tick {
            FrameCursor::During { local_tick: t - f.start_tick }
        } else {
            FrameCursor::After
        })
    }

    /// Visible frames with their depth and cursor relation.
    pub fn frames(&self) -> Vec<(StepId, u32, FrameCursor)> {
        self.tree
            .walk()
            .into_iter()
            .filter(|e| e.kind == Some(StepKind::FunctionFrame))
            .filter_map(|e| {
                let s = e.step_id?;
                let depth = self.trace.frame(s)?.depth;
                Some((s, depth, self.frame_cursor_state(s).ok()?))
            })
            .collect()
    }

    /// Untaken branches of the whole run.
    pub fn stubs(&self) -> Vec<NodeId> {
        self.trace.stubs()
    }

    pub fn to_json(&self) -> Json {
        let frames: Vec<Json> = self
            .frames()
            .into_iter()
            .map(|(s, depth, state)| {
                let mut f = json!({ "stepId": s, "depth": depth });
                if let (Json::Object(m), Json::Object(st)) = (&mut f, json!(state)) {
                    m.extend(st);
                }
                f
            })
            .collect();
        json!({
            "policy": self.policy,
            "totalOps": self.trace.total_ops(),
            "cursor": self.cursor,
            "visibleSteps": [self.tree],
            "frames": frames,
            "stubs": self.stubs(),
            "expansionHistory": self.history,
        })
    }
}

fn toggle(set: &mut BTreeSet<StepId>, s: StepId) {
    if !set.remove(&s) {
        set.insert(s);
    }
}

fn is_loop(kind: StepKind) -> bool {
    matches!(kind, StepKind::Node(NodeKind::ForStatement | NodeKind::WhileStatement))
}
