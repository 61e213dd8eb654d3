//! Data-state presentation derived from a trace and a view: animation
//! events, read/write highlights, residuals of overwritten values and
//! fading trace paths.


use serde::Serialize;

use crate::abstraction::{LinearEntry, ViewState};
use crate::interpreter::{LocationId, MemorySnapshot, Value};
use crate::trace::{compose_flow, DataFlow, StepId, Tick, Trace};

/// Residuals kept per location in a view.
pub const RESIDUAL_RETENTION: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EventKind {
    Create,
    Move,
    Cause,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Target {
    pub loc: LocationId,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnimationEvent {
    pub kind: EventKind,
    pub target: Target,
    pub sources: Vec<LocationId>,
    pub step_id: Option<StepId>,
    pub start_tick: Tick,
    pub end_tick: Tick,
}

/// Classifies every write of a flow: no sources is a Create, a single source
/// carried by copies is a Move, anything else is a Cause.
pub fn classify_flow(flow: &DataFlow, step_id: Option<StepId>, start_tick: Tick, end_tick: Tick) -> Vec<AnimationEvent> {
    flow.writes
        .iter()
        .map(|w| {
            let kind = match (w.provenance.len(), w.copy) {
                (0, _) => EventKind::Create,
                (1, true) => EventKind::Move,
                _ => EventKind::Cause,
            };
            AnimationEvent {
                kind,
                target: Target { loc: w.loc, value: w.value.clone() },
                sources: w.provenance.clone(),
                step_id,
                start_tick,
                end_tick,
            }
        })
        .collect()
}

pub fn classify_step(trace: &Trace, step: StepId) -> Vec<AnimationEvent> {
    let s = trace.step(step);
    classify_flow(&s.flow, Some(step), s.start_tick, s.end_tick)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Highlights {
    pub reads: Vec<LocationId>,
    pub writes: Vec<LocationId>,
}

pub fn highlight_flow(flow: &DataFlow) -> Highlights {
    Highlights {
        reads: flow.reads.clone(),
        writes: flow.writes.iter().map(|w| w.loc).collect(),
    }
}

pub fn highlight_sets(trace: &Trace, step: StepId) -> Highlights {
    highlight_flow(&trace.step(step).flow)
}

/// Net flow of the operations in `[start, end)`, covered by as few steps as possible.
pub fn range_flow(trace: &Trace, start: Tick, end: Tick) -> DataFlow {
    let mut pieces = Vec::new();
    let mut at = start;
    while at < end {
        let mut s = trace.leaf_at(at).expect("tick inside trace");
        while let Some(p) = trace.step(s).parent {
            let ps = trace.step(p);
            if ps.start_tick == at && ps.end_tick <= end {
                s = p;
            } else {
                break;
            }
        }
        pieces.push(s);
        at = trace.step(s).end_tick;
    }
    compose_flow(pieces.iter().map(|s| &trace.step(*s).flow))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualEntry {
    pub location: LocationId,
    pub old_value: Value,
    pub replaced_at_tick: Tick,
    /// 1 for the most recently replaced value.
    pub rank: usize,
}

fn written_value(trace: &Trace, tick: Tick, loc: LocationId) -> Value {
    trace
        .op(tick)
        .writes()
        .filter(|w| w.loc == loc)
        .last()
        .map(|w| w.value.clone())
        .expect("indexed write")
}

/// Overwritten values of one location before `tick`, newest first.
pub fn residual_history(trace: &Trace, loc: LocationId, tick: Tick) -> Vec<ResidualEntry> {
    let writes = trace.writes_of(loc);
    let n = writes.partition_point(|w| *w < tick);
    (1..n)
        .rev()
        .enumerate()
        .map(|(rank, j)| ResidualEntry {
            location: loc,
            old_value: written_value(trace, writes[j - 1], loc),
            replaced_at_tick: writes[j],
            rank: rank + 1,
        })
        .collect()
}

/// Up to `retention` replaced values of every location live at `tick`;
/// `None` keeps the full history.
pub fn residuals_at(trace: &Trace, tick: Tick, retention: Option<usize>) -> Vec<ResidualEntry> {
    let Ok(snap) = trace.snapshot_at(tick) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for loc in snap.locations() {
        let mut h = residual_history(trace, loc, tick);
        if let Some(r) = retention {
            h.truncate(r);
        }
        out.extend(h);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TracePath {
    pub from: LocationId,
    pub to: LocationId,
    pub kind: EventKind,
    pub produced_at_tick: Tick,
    /// Visible steps completed since the path was produced; 0 for the latest.
    pub age: usize,
}

fn entry_flow(trace: &Trace, e: &LinearEntry) -> DataFlow {
    range_flow(trace, e.start, e.end)
}

/// Data movement of the visible steps completed before the cursor, newest
/// first, at most `max_age` steps back.
pub fn trace_paths(view: &ViewState, max_age: usize) -> Vec<TracePath> {
    let trace = view.trace();
    let tick = view.cursor().tick;
    let lin = view.linearize();
    let done = lin.partition_point(|e| e.end <= tick);
    let mut out = Vec::new();
    for (age, e) in lin[..done].iter().rev().enumerate().take(max_age) {
        for ev in classify_flow(&entry_flow(trace, e), e.step_id, e.start, e.end) {
            if ev.kind == EventKind::Create {
                continue;
            }
            for src in &ev.sources {
                out.push(TracePath {
                    from: *src,
                    to: ev.target.loc,
                    kind: ev.kind,
                    produced_at_tick: e.end,
                    age,
                });
            }
        }
    }
    out
}

/// Everything the data panel shows at the cursor.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DataPanel {
    pub tick: Tick,
    pub memory: MemorySnapshot,
    /// The visible step that ends at or contains the cursor.
    pub current: Option<LinearEntry>,
    pub highlights: Highlights,
    pub events: Vec<AnimationEvent>,
    pub residuals: Vec<ResidualEntry>,
    pub paths: Vec<TracePath>,
}

pub fn data_panel(view: &ViewState, max_age: usize) -> DataPanel {
    let trace = view.trace();
    let cursor = view.cursor();
    let p = cursor.position();
    let lin = view.linearize();
    let current = lin.iter().find(|e| (e.start as f64) < p && p <= e.end as f64).cloned();
    let flow = current.as_ref().map(|e| entry_flow(trace, e)).unwrap_or_default();
    let events = current
        .as_ref()
        .map(|e| classify_flow(&flow, e.step_id, e.start, e.end))
        .unwrap_or_default();
    DataPanel {
        tick: cursor.tick,
        memory: trace.snapshot_at(cursor.tick).expect("cursor inside trace"),
        highlights: highlight_flow(&flow),
        current,
        events,
        residuals: residuals_at(trace, cursor.tick, Some(RESIDUAL_RETENTION)),
        paths: trace_paths(view, max_age),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Keyframe {
    pub step_id: Option<StepId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepId>,
    pub start_tick: Tick,
    pub end_tick: Tick,
    /// Memory where this part of the animation begins.
    pub from: MemorySnapshot,
    /// Memory where it ends.
    pub to: MemorySnapshot,
    pub events: Vec<AnimationEvent>,
    /// Normalized times within the whole drag.
    pub t0: f64,
    pub t1: f64,
}

impl Keyframe {
    /// The same keyframe played backwards.
    pub fn mirrored(&self) -> Keyframe {
        Keyframe {
            from: self.to.clone(),
            to: self.from.clone(),
            t0: 1.0 - self.t1,
            t1: 1.0 - self.t0,
            ..self.clone()
        }
    }
}

/// Interpolation script for moving the cursor between two positions, one
/// keyframe per visible step crossed.
pub fn keyframes(view: &ViewState, from: f64, to: f64) -> Vec<Keyframe> {
    let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
    if hi <= lo {
        return Vec::new();
    }
    let trace = view.trace();
    let mut out: Vec<Keyframe> = view
        .linearize()
        .into_iter()
        .filter(|e| (e.start as f64) < hi && (e.end as f64) > lo)
        .map(|e| {
            let flow = entry_flow(trace, &e);
            let a = (e.start as f64).max(lo);
            let b = (e.end as f64).min(hi);
            Keyframe {
                step_id: e.step_id,
                events: classify_flow(&flow, e.step_id, e.start, e.end),
                from: trace.snapshot_at(e.start).expect("in range"),
                to: trace.snapshot_at(e.end).expect("in range"),
                t0: (a - lo) / (hi - lo),
                t1: (b - lo) / (hi - lo),
                start_tick: e.start,
                end_tick: e.end,
                steps: e.steps,
            }
        })
        .collect();
    if from > to {
        out.reverse();
        out = out.iter().map(Keyframe::mirrored).collect();
    }
    out
}
