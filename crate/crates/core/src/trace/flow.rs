use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::Serialize;

use crate::interpreter::{HeapId, LocationId, Value};

/// A single write as seen from outside the step that performed it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowWrite {
    pub loc: LocationId,
    pub value: Value,
    /// Pre-step locations the value was computed from, sorted.
    pub provenance: Vec<LocationId>,
    /// The value is an unchanged copy of its single provenance location.
    #[serde(skip)]
    pub copy: bool,
    /// The location did not exist before the step.
    #[serde(skip)]
    pub fresh: bool,
}

/// Memory lifecycle events that writes alone cannot express.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Lifecycle {
    pub frees: Vec<LocationId>,
    pub popped_frames: u32,
    pub pushed_frames: Vec<Arc<str>>,
    pub arrays: Vec<HeapId>,
}

impl Lifecycle {
    pub fn is_empty(&self) -> bool {
        self.frees.is_empty()
            && self.popped_frames == 0
            && self.pushed_frames.is_empty()
            && self.arrays.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DataFlow {
    pub reads: Vec<LocationId>,
    pub writes: Vec<FlowWrite>,
    #[serde(skip_serializing_if = "Lifecycle::is_empty")]
    pub lifecycle: Lifecycle,
}

impl DataFlow {
    pub fn write_to(&self, loc: LocationId) -> Option<&FlowWrite> {
        self.writes.iter().find(|w| w.loc == loc)
    }
}

/// Raw side effect of a primitive operation, in execution order.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Effect {
    PushFrame { name: Arc<str> },
    PopFrame,
    AllocArray { heap: HeapId },
    Write(FlowWrite),
    Free { loc: LocationId },
}

/// Incremental composition of consecutive flows into one net flow.
#[derive(Debug, Default)]
pub struct Composer {
    reads: Vec<LocationId>,
    read_set: HashSet<LocationId>,
    writes: IndexMap<LocationId, FlowWrite>,
    // Rewritten provenance and copy flag of every location written so far,
    // kept after the location is freed.
    origin: HashMap<LocationId, (Vec<LocationId>, bool)>,
    created: HashSet<LocationId>,
    frees: Vec<LocationId>,
    pops: u32,
    pushes: Vec<Arc<str>>,
    arrays: Vec<HeapId>,
}

impl Composer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn read(&mut self, loc: LocationId) {
        if !self.origin.contains_key(&loc) && self.read_set.insert(loc) {
            self.reads.push(loc);
        }
    }

    pub fn write(&mut self, w: &FlowWrite) {
        let mut provenance = Vec::with_capacity(w.provenance.len());
        let mut copy = w.copy && w.provenance.len() == 1;
        for src in &w.provenance {
            match self.origin.get(src) {
                Some((p, c)) => {
                    provenance.extend_from_slice(p);
                    copy &= *c;
                }
                None => provenance.push(*src),
            }
        }
        provenance.sort_unstable();
        provenance.dedup();
        copy &= provenance.len() == 1;
        let fresh = if self.origin.contains_key(&w.loc) {
            self.created.contains(&w.loc)
        } else {
            if w.fresh {
                self.created.insert(w.loc);
            }
            w.fresh
        };
        self.origin.insert(w.loc, (provenance.clone(), copy));
        self.writes.insert(
            w.loc,
            FlowWrite { loc: w.loc, value: w.value.clone(), provenance, copy, fresh },
        );
    }

    pub fn free(&mut self, loc: LocationId) {
        self.writes.shift_remove(&loc);
        if !self.created.remove(&loc) {
            self.frees.push(loc);
        }
    }

    pub fn push_frame(&mut self, name: Arc<str>) {
        self.pushes.push(name);
    }

    pub fn pop_frame(&mut self) {
        if self.pushes.pop().is_none() {
            self.pops += 1;
        }
    }

    pub fn alloc_array(&mut self, heap: HeapId) {
        self.arrays.push(heap);
    }

    pub fn effect(&mut self, e: &Effect) {
        match e {
            Effect::PushFrame { name } => self.push_frame(name.clone()),
            Effect::PopFrame => self.pop_frame(),
            Effect::AllocArray { heap } => self.alloc_array(*heap),
            Effect::Write(w) => self.write(w),
            Effect::Free { loc } => self.free(*loc),
        }
    }

    /// Appends a whole flow, applying its parts in the order `apply_flow` uses.
    pub fn absorb(&mut self, flow: &DataFlow) {
        for r in &flow.reads {
            self.read(*r);
        }
        for f in &flow.lifecycle.frees {
            self.free(*f);
        }
        for _ in 0..flow.lifecycle.popped_frames {
            self.pop_frame();
        }
        for name in &flow.lifecycle.pushed_frames {
            self.push_frame(name.clone());
        }
        for h in &flow.lifecycle.arrays {
            self.alloc_array(*h);
        }
        for w in &flow.writes {
            self.write(w);
        }
    }

    pub fn finish(self) -> DataFlow {
        DataFlow {
            reads: self.reads,
            writes: self.writes.into_values().collect(),
            lifecycle: Lifecycle {
                frees: self.frees,
                popped_frames: self.pops,
                pushed_frames: self.pushes,
                arrays: self.arrays,
            },
        }
    }
}

/// Net flow of consecutive flows: reads of pre-existing state, the last write per
/// surviving location with provenance rewritten through intermediate writes, and
/// the remaining lifecycle effects.
pub fn compose_flow<'a>(flows: impl IntoIterator<Item = &'a DataFlow>) -> DataFlow {
    let mut c = Composer::new();
    for f in flows {
        c.absorb(f);
    }
    c.finish()
}

/// Normalized flow of one primitive operation.
pub fn op_flow(reads: &[LocationId], effects: &[Effect]) -> DataFlow {
    let mut c = Composer::new();
    for r in reads {
        c.read(*r);
    }
    for e in effects {
        c.effect(e);
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(loc: LocationId, v: f64, prov: &[LocationId], copy: bool, fresh: bool) -> FlowWrite {
        FlowWrite { loc, value: Value::Number(v), provenance: prov.to_vec(), copy, fresh }
    }

    fn op(reads: &[LocationId], effects: Vec<Effect>) -> DataFlow {
        op_flow(reads, &effects)
    }

    #[test]
    fn compose_empty_is_empty() {
        assert_eq!(compose_flow([]), DataFlow::default());
    }

    #[test]
    fn register_temp_is_elided() {
        // x=0, y=1 exist; temp register 5.
        let a = op(&[0], vec![Effect::Write(w(5, 1.0, &[0], true, true))]);
        let b = op(&[1], vec![Effect::Write(w(0, 2.0, &[1], true, false))]);
        let c = op(&[5], vec![Effect::Write(w(1, 1.0, &[5], true, false)), Effect::Free { loc: 5 }]);
        let f = compose_flow([&a, &b, &c]);
        assert_eq!(f.reads, vec![0, 1]);
        assert_eq!(f.writes, vec![w(0, 2.0, &[1], true, false), w(1, 1.0, &[0], true, false)]);
        assert!(f.lifecycle.is_empty());
    }

    #[test]
    fn arithmetic_breaks_copy_chain() {
        let a = op(&[0, 1], vec![Effect::Write(w(5, 3.0, &[0, 1], false, true))]);
        let b = op(&[5], vec![Effect::Write(w(2, 3.0, &[5], true, true)), Effect::Free { loc: 5 }]);
        let f = compose_flow([&a, &b]);
        assert_eq!(f.writes, vec![w(2, 3.0, &[0, 1], false, true)]);
    }

    #[test]
    fn frees_of_outside_locations_survive() {
        let a = op(&[3], vec![Effect::Free { loc: 3 }]);
        let f = compose_flow([&a]);
        assert_eq!(f.lifecycle.frees, vec![3]);
        assert_eq!(f.reads, vec![3]);
    }

    #[test]
    fn frame_push_and_pop_cancel() {
        let a = op(&[], vec![Effect::PopFrame]);
        let b = op(&[], vec![Effect::PushFrame { name: "f".into() }]);
        let c = op(&[], vec![Effect::PopFrame]);
        let f = compose_flow([&a, &b, &c]);
        assert_eq!(f.lifecycle.popped_frames, 1);
        assert!(f.lifecycle.pushed_frames.is_empty());
    }

    #[test]
    fn composition_is_associative_on_a_chain() {
        let ops = [
            op(&[], vec![Effect::Write(w(4, 1.0, &[], false, true))]),
            op(&[4], vec![Effect::Write(w(0, 1.0, &[4], true, false)), Effect::Free { loc: 4 }]),
            op(&[0], vec![Effect::Write(w(5, 1.0, &[0], true, true))]),
            op(&[5, 1], vec![Effect::Write(w(6, 3.0, &[5, 1], false, true)), Effect::Free { loc: 5 }]),
            op(&[6], vec![Effect::Write(w(2, 3.0, &[6], true, false)), Effect::Free { loc: 6 }]),
        ];
        let flat = compose_flow(&ops);
        let left = compose_flow(&ops[..2]);
        let right = compose_flow(&ops[2..]);
        assert_eq!(compose_flow([&left, &right]), flat);
        assert_eq!(flat.writes, vec![w(0, 1.0, &[], false, false), w(2, 3.0, &[1], false, false)]);
    }
}
