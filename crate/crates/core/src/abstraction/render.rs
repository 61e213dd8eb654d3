use std::collections::HashMap;

use serde::Serialize;

use super::ViewState;
use crate::syntax::{NodeId, NodeKind, Role};
use crate::trace::{StepId, StepKind, Tick, Trace};

/// How a visible entry is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RenderKind {
    Full,
    Compact,
    Dot,
    DotGroup,
    Stub,
    CheckMark,
    CrossMark,
    Frame,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Presentation {
    Expanded,
    Collapsed,
    Compact,
    Abbreviated,
    DotGroup { aggregated: bool },
}

/// One entry of the rendered control-flow tree.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VisibleStep {
    /// The step drawn, absent for stubs, dot groups and middle dots.
    pub step_id: Option<StepId>,
    /// Key for `toggleGroup`: the first member of a dot group.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_id: Option<StepId>,
    /// Steps covered by a dot group or a middle dot.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepId>,
    pub ast_node: NodeId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<StepKind>,
    pub render_kind: RenderKind,
    pub presentation: Presentation,
    pub start_tick: Tick,
    pub end_tick: Tick,
    pub landmark: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_depth: Option<u32>,
    pub children: Vec<VisibleStep>,
}

impl VisibleStep {
    pub fn is_stub(&self) -> bool {
        self.render_kind == RenderKind::Stub
    }

    pub fn ticks(&self) -> std::ops::Range<Tick> {
        self.start_tick..self.end_tick
    }

    /// Depth-first search for the entry drawing `step`.
    pub fn find(&self, step: StepId) -> Option<&VisibleStep> {
        if self.step_id == Some(step) {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(step))
    }

    pub fn find_group(&self, group: StepId) -> Option<&VisibleStep> {
        if self.group_id == Some(group) {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find_group(group))
    }

    /// Preorder walk over this entry and all nested entries.
    pub fn walk(&self) -> Vec<&VisibleStep> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            stack.extend(e.children.iter().rev());
        }
        out
    }
}

/// A visible leaf with the slice of the timeline it stands for.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LinearEntry {
    pub step_id: Option<StepId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepId>,
    pub render_kind: RenderKind,
    pub start: Tick,
    pub end: Tick,
}

/// Visible leaves in tick order. Own operations of an expanded step that
/// none of its visible children cover are attributed to the preceding leaf.
pub fn linearize(root: &VisibleStep, total: Tick) -> Vec<LinearEntry> {
    fn has_width(e: &VisibleStep) -> bool {
        !e.is_stub() && e.end_tick > e.start_tick
    }
    fn collect<'a>(e: &'a VisibleStep, out: &mut Vec<&'a VisibleStep>) {
        if e.children.iter().any(has_width) {
            for c in e.children.iter().filter(|c| has_width(c)) {
                collect(c, out);
            }
        } else if has_width(e) {
            out.push(e);
        }
    }
    let mut leaves = Vec::new();
    collect(root, &mut leaves);
    let mut out: Vec<LinearEntry> = Vec::with_capacity(leaves.len());
    for (i, e) in leaves.iter().enumerate() {
        let start = if i == 0 { 0 } else { e.start_tick };
        let end = leaves.get(i + 1).map_or(total, |n| n.start_tick);
        out.push(LinearEntry {
            step_id: e.step_id,
            steps: e.steps.clone(),
            render_kind: e.render_kind,
            start,
            end,
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Closure {
    Compact,
    Abbreviated,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Normal,
    Dot,
    CompactChild,
}

enum Item {
    Step { id: StepId, force_open: bool },
    Group(Vec<StepId>),
    Stub { node: NodeId, at: Tick },
}

/// Derives the visible tree from a view's state.
pub(super) struct Renderer<'a> {
    v: &'a ViewState,
    t: &'a Trace,
    closure: HashMap<StepId, (Closure, usize)>,
    // For every step on the path to an effective expansion, the history index
    // of the newest such expansion.
    newest: HashMap<StepId, usize>,
}

impl<'a> Renderer<'a> {
    pub(super) fn new(v: &'a ViewState) -> Self {
        let t = &*v.trace;
        let eff = v.effective_history();
        let n = eff.len();
        let mut closure = HashMap::new();
        let mut newest = HashMap::new();
        for (i, &s) in eff.iter().enumerate() {
            if i + 2 == n {
                closure.insert(s, (Closure::Compact, i));
            } else if i + 2 < n {
                closure.insert(s, (Closure::Abbreviated, i));
            }
            newest.insert(s, i);
            for a in t.ancestors(s) {
                newest.insert(a, i);
            }
        }
        Renderer { v, t, closure, newest }
    }

    pub(super) fn render(&self) -> VisibleStep {
        self.step_entry(0, Mode::Normal, false)
    }

    fn step_entry(&self, s: StepId, mode: Mode, force_open: bool) -> VisibleStep {
        let open = force_open || (self.v.expanded.contains(&s) && !self.t.decompose(s).is_empty());
        if mode == Mode::Dot {
            return self.leaf(s, RenderKind::Dot, Presentation::Abbreviated);
        }
        let closure = if force_open { None } else { self.closure.get(&s).copied() };
        let toggled = self.v.compact.contains(&s);
        if open {
            let items = self.layout(s);
            match closure {
                Some((Closure::Abbreviated, idx)) => {
                    if self.newest.get(&s).is_some_and(|n| *n > idx) {
                        let children = items
                            .into_iter()
                            .map(|it| match it {
                                Item::Step { id, force_open } => {
                                    let on_path = self.newest.get(&id).is_some_and(|n| *n > idx);
                                    let m = if on_path { Mode::Normal } else { Mode::Dot };
                                    self.step_entry(id, m, force_open && on_path)
                                }
                                other => self.item_entry(other, Mode::Normal),
                            })
                            .collect();
                        let mut e = self.leaf(s, RenderKind::Dot, Presentation::Abbreviated);
                        e.children = children;
                        e
                    } else {
                        self.leaf(s, RenderKind::Dot, Presentation::Abbreviated)
                    }
                }
                c => {
                    let compact = (c.is_some()) != toggled;
                    let child_mode = if compact { Mode::CompactChild } else { Mode::Normal };
                    let children = items.into_iter().map(|it| self.item_entry(it, child_mode)).collect();
                    let (rk, pres) = if compact {
                        (RenderKind::Compact, Presentation::Compact)
                    } else {
                        (RenderKind::Full, Presentation::Expanded)
                    };
                    let mut e = self.leaf(s, self.special_kind(s).unwrap_or(rk), pres);
                    e.children = children;
                    e
                }
            }
        } else {
            let compact = toggled || mode == Mode::CompactChild;
            let rk = if compact { RenderKind::Compact } else { RenderKind::Full };
            let pres = if toggled { Presentation::Compact } else { Presentation::Collapsed };
            self.leaf(s, self.special_kind(s).unwrap_or(rk), pres)
        }
    }

    fn special_kind(&self, s: StepId) -> Option<RenderKind> {
        match self.t.condition(s) {
            Some(true) => return Some(RenderKind::CheckMark),
            Some(false) => return Some(RenderKind::CrossMark),
            None => {}
        }
        (self.t.step(s).kind == StepKind::FunctionFrame).then_some(RenderKind::Frame)
    }

    fn leaf(&self, s: StepId, render_kind: RenderKind, presentation: Presentation) -> VisibleStep {
        let step = self.t.step(s);
        VisibleStep {
            step_id: Some(s),
            group_id: None,
            steps: Vec::new(),
            ast_node: step.ast_node,
            kind: Some(step.kind),
            render_kind,
            presentation,
            start_tick: step.start_tick,
            end_tick: step.end_tick,
            landmark: landmark(self.t, s),
            frame_depth: self.t.frame(s).map(|f| f.depth),
            children: Vec::new(),
        }
    }

    fn item_entry(&self, item: Item, mode: Mode) -> VisibleStep {
        match item {
            Item::Step { id, force_open } => self.step_entry(id, mode, force_open),
            Item::Group(members) => self.group_entry(members),
            Item::Stub { node, at } => VisibleStep {
                step_id: None,
                group_id: None,
                steps: Vec::new(),
                ast_node: node,
                kind: None,
                render_kind: RenderKind::Stub,
                presentation: Presentation::Collapsed,
                start_tick: at,
                end_tick: at,
                landmark: flatten(self.t.program().text(node)),
                frame_depth: None,
                children: Vec::new(),
            },
        }
    }

    fn group_entry(&self, members: Vec<StepId>) -> VisibleStep {
        let first = members[0];
        let aggregated = !self.v.open_groups.contains(&first);
        let n = members.len();
        let children: Vec<VisibleStep> = if aggregated && n >= 4 {
            let middle = &members[1..n - 1];
            vec![
                self.step_entry(first, Mode::Dot, false),
                VisibleStep {
                    step_id: None,
                    group_id: None,
                    steps: middle.to_vec(),
                    ast_node: self.t.step(middle[0]).ast_node,
                    kind: None,
                    render_kind: RenderKind::Dot,
                    presentation: Presentation::Abbreviated,
                    start_tick: self.t.step(middle[0]).start_tick,
                    end_tick: self.t.step(middle[middle.len() - 1]).end_tick,
                    landmark: String::new(),
                    frame_depth: None,
                    children: Vec::new(),
                },
                self.step_entry(members[n - 1], Mode::Dot, false),
            ]
        } else {
            members.iter().map(|m| self.step_entry(*m, Mode::Dot, false)).collect()
        };
        VisibleStep {
            step_id: None,
            group_id: Some(first),
            ast_node: self.t.step(first).ast_node,
            kind: None,
            render_kind: RenderKind::DotGroup,
            presentation: Presentation::DotGroup { aggregated },
            start_tick: self.t.step(first).start_tick,
            end_tick: self.t.step(members[n - 1]).end_tick,
            landmark: String::new(),
            frame_depth: None,
            steps: members,
            children,
        }
    }

    fn layout(&self, s: StepId) -> Vec<Item> {
        let step = self.t.step(s);
        let plain = |id| Item::Step { id, force_open: false };
        match step.kind {
            StepKind::Node(NodeKind::ForStatement | NodeKind::WhileStatement) => self.loop_layout(s),
            StepKind::FunctionFrame if self.v.policy.disclosure => {
                let parts = self.t.decompose(s);
                let mut lead = parts.len().saturating_sub(4);
                if let Some(j) = parts[..lead].iter().position(|p| self.v.expanded.contains(p)) {
                    lead = j;
                }
                let mut out = Vec::new();
                if lead > 0 {
                    out.push(Item::Group(parts[..lead].to_vec()));
                }
                out.extend(parts[lead..].iter().map(|p| plain(*p)));
                out
            }
            StepKind::Node(NodeKind::IfStatement) => {
                let mut out: Vec<Item> = self.t.decompose(s).into_iter().map(plain).collect();
                let program = self.t.program();
                for stub in self.t.stubs_of(s) {
                    let pos = program.node(stub).span.start_offset;
                    let idx = out
                        .iter()
                        .position(|it| match it {
                            Item::Step { id, .. } => {
                                program.node(self.t.step(*id).ast_node).span.start_offset > pos
                            }
                            _ => false,
                        })
                        .unwrap_or(out.len());
                    let at = match idx.checked_sub(1).map(|i| &out[i]) {
                        Some(Item::Step { id, .. }) => self.t.step(*id).end_tick,
                        _ => step.start_tick,
                    };
                    out.insert(idx, Item::Stub { node: stub, at });
                }
                out
            }
            _ => self.t.decompose(s).into_iter().map(plain).collect(),
        }
    }

    fn loop_layout(&self, s: StepId) -> Vec<Item> {
        let step = self.t.step(s);
        let mut head = Vec::new();
        let mut iterations = Vec::new();
        let mut tail = Vec::new();
        for &c in &step.children {
            let child = self.t.step(c);
            if child.folded {
                continue;
            }
            if child.kind == StepKind::Iteration {
                iterations.push(c);
            } else if iterations.is_empty() && !self.is_final_test(s, c) {
                head.push(c);
            } else {
                tail.push(c);
            }
        }
        let plain = |id| Item::Step { id, force_open: false };
        let mut out: Vec<Item> = head.into_iter().map(plain).collect();
        if self.v.is_unrolled(s) {
            out.extend(iterations.iter().map(|i| Item::Step { id: *i, force_open: true }));
        } else {
            match self.v.open_iteration(&iterations) {
                Some(k) => {
                    if k > 0 {
                        out.push(Item::Group(iterations[..k].to_vec()));
                    }
                    out.push(plain(iterations[k]));
                    if k + 1 < iterations.len() {
                        out.push(Item::Group(iterations[k + 1..].to_vec()));
                    }
                }
                None if !iterations.is_empty() => out.push(Item::Group(iterations)),
                None => {}
            }
        }
        let at = tail.first().map_or(step.end_tick, |t| self.t.step(*t).start_tick);
        out.extend(self.t.stubs_of(s).into_iter().map(|node| Item::Stub { node, at }));
        out.extend(tail.into_iter().map(plain));
        out
    }

    // A loop that never iterates has its only test after the init.
    fn is_final_test(&self, loop_step: StepId, c: StepId) -> bool {
        let child = self.t.step(c);
        child.kind == StepKind::LoopTest && self.t.step(loop_step).children.iter().rev().find(|x| !self.t.step(**x).folded) == Some(&c)
    }
}

/// Source of a step's node on one line with every executed child replaced by `■`.
pub fn landmark(t: &Trace, s: StepId) -> String {
    let program = t.program();
    let step = t.step(s);
    let node = program.node(step.ast_node);
    let last = subtree_end(t, s);
    let mut holes: Vec<(usize, usize)> = node
        .children
        .iter()
        .filter(|c| c.role != Role::Callee)
        .filter(|c| {
            let ids = t.steps_for_node(c.node);
            let from = ids.partition_point(|x| *x <= s);
            ids.get(from).is_some_and(|x| *x <= last)
        })
        .map(|c| {
            let sp = program.node(c.node).span;
            (sp.start_offset, sp.end_offset)
        })
        .collect();
    holes.sort_unstable();
    let src = program.source();
    let mut out = String::new();
    let mut at = node.span.start_offset;
    for (a, b) in holes {
        out.push_str(&src[at..a]);
        out.push('■');
        at = b;
    }
    out.push_str(&src[at..node.span.end_offset]);
    flatten(&out)
}

fn flatten(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Largest step id in the subtree of `s`; preorder numbering makes the
/// subtree the contiguous range `s..=subtree_end(s)`.
pub(crate) fn subtree_end(t: &Trace, s: StepId) -> StepId {
    let mut x = s;
    while let Some(c) = t.step(x).children.last() {
        x = *c;
    }
    x
}
