use thiserror::Error;

use super::{compose_flow, op_flow, Tick, Trace};
use crate::interpreter::apply_flow;

/// A broken trace invariant, with the step or tick where it was found.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum Violation {
    #[error("root covers {start}..{end}, expected 0..{total}")]
    RootSpan { start: Tick, end: Tick, total: Tick },
    #[error("children of step {0} do not tile its tick range")]
    Tiling(u32),
    #[error("step {0} has a bad parent or child order")]
    Structure(u32),
    #[error("leaf ticks are not dense")]
    LeafTicks,
    #[error("flow of step {0} is not the composition of its parts")]
    Recomposition(u32),
    #[error("replayed memory diverges from execution at tick {0}")]
    SnapshotChain(Tick),
    #[error("applying the flow of step {0} to its pre-state does not give its post-state")]
    FlowApplication(u32),
    #[error("a write of step {0} cites a location the step never read")]
    Provenance(u32),
}

/// Checks tiling, tick density, flow recomposition and snapshot chaining.
pub fn verify(t: &Trace) -> Result<(), Violation> {
    let n = t.total_ops();
    let root = t.root();
    if (root.start_tick, root.end_tick) != (0, n) {
        return Err(Violation::RootSpan { start: root.start_tick, end: root.end_tick, total: n });
    }
    let mut leaves = Vec::with_capacity(n);
    for s in t.steps() {
        if s.children.iter().any(|c| *c <= s.id || t.step(*c).parent != Some(s.id)) {
            return Err(Violation::Structure(s.id));
        }
        if let Some(tick) = s.primitive {
            if !s.children.is_empty() || (s.start_tick, s.end_tick) != (tick, tick + 1) {
                return Err(Violation::Structure(s.id));
            }
            leaves.push(tick);
            let op = t.op(tick);
            if s.flow != op_flow(&op.reads, &op.effects) {
                return Err(Violation::Recomposition(s.id));
            }
        } else {
            let mut at = s.start_tick;
            for c in &s.children {
                let c = t.step(*c);
                if c.start_tick != at {
                    return Err(Violation::Tiling(s.id));
                }
                at = c.end_tick;
            }
            if at != s.end_tick {
                return Err(Violation::Tiling(s.id));
            }
            if s.flow != compose_flow(s.children.iter().map(|c| &t.step(*c).flow)) {
                return Err(Violation::Recomposition(s.id));
            }
        }
    }
    if leaves != (0..n).collect::<Vec<_>>() {
        return Err(Violation::LeafTicks);
    }
    if let Some(live) = t.live_snapshots() {
        for (tick, expected) in live.iter().enumerate().take(n + 1) {
            if t.snapshot_at(tick).ok().as_ref() != Some(expected) {
                return Err(Violation::SnapshotChain(tick));
            }
        }
    }
    for s in t.steps() {
        let (Ok(pre), Ok(post)) = (t.pre(s.id), t.post(s.id)) else {
            return Err(Violation::SnapshotChain(s.start_tick));
        };
        if apply_flow(&pre, &s.flow, t.locations()).ok() != Some(post) {
            return Err(Violation::FlowApplication(s.id));
        }
        if s.flow.writes.iter().any(|w| w.provenance.iter().any(|p| !s.flow.reads.contains(p))) {
            return Err(Violation::Provenance(s.id));
        }
    }
    Ok(())
}
