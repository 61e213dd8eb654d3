use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use thiserror::Error;

use super::value::{HeapId, Value};
use crate::trace::{DataFlow, FlowWrite};

/// One memory slot: a register, a frame binding or an array element. Never reused.
pub type LocationId = u32;

pub const GLOBAL_FRAME: &str = "<global>";

/// Where a location lives for its whole lifetime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Place {
    Register,
    Binding { frame: u32, name: Arc<str> },
    Element { array: HeapId, index: u32 },
}

impl Place {
    pub fn is_register(&self) -> bool {
        matches!(self, Place::Register)
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        match self {
            Place::Register => m.serialize_entry("type", "register")?,
            Place::Binding { frame, name } => {
                m.serialize_entry("type", "binding")?;
                m.serialize_entry("frame", frame)?;
                m.serialize_entry("name", name)?;
            }
            Place::Element { array, index } => {
                m.serialize_entry("type", "element")?;
                m.serialize_entry("array", array)?;
                m.serialize_entry("index", index)?;
            }
        }
        m.end()
    }
}

/// Placement of every location allocated during an execution, indexed by id.
#[derive(Clone, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct LocationTable {
    places: Vec<Place>,
}

impl LocationTable {
    pub fn place(&self, loc: LocationId) -> Option<&Place> {
        self.places.get(loc as usize)
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    pub fn is_register(&self, loc: LocationId) -> bool {
        self.place(loc).is_some_and(Place::is_register)
    }

    pub(crate) fn alloc(&mut self, place: Place) -> LocationId {
        self.places.push(place);
        (self.places.len() - 1) as LocationId
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub place: Place,
    pub value: Value,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MemoryError {
    #[error("location {0} is not live")]
    UnknownLocation(LocationId),
    #[error("location {0} is already live")]
    AlreadyLive(LocationId),
    #[error("location {0} has no recorded placement")]
    NoPlacement(LocationId),
    #[error("location {loc} targets missing {what}")]
    DanglingPlace { loc: LocationId, what: &'static str },
    #[error("frame {0} popped while bindings remain")]
    FrameNotEmpty(usize),
    #[error("no frame to pop")]
    NoFrame,
}

/// Full memory state between two primitive operations.
///
/// Registers, frame bindings and array elements are views over one ordered cell map,
/// so two snapshots with the same live locations compare equal regardless of the
/// order in which those locations were written.
#[derive(Clone, Debug, PartialEq)]
pub struct MemorySnapshot {
    cells: BTreeMap<LocationId, Cell>,
    frames: Vec<Arc<str>>,
    arrays: BTreeSet<HeapId>,
}

impl Default for MemorySnapshot {
    fn default() -> Self {
        MemorySnapshot {
            cells: BTreeMap::new(),
            frames: vec![Arc::from(GLOBAL_FRAME)],
            arrays: BTreeSet::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BindingView<'a> {
    pub name: &'a str,
    pub loc: LocationId,
    pub value: &'a Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameView<'a> {
    pub name: &'a str,
    pub bindings: Vec<BindingView<'a>>,
}

impl MemorySnapshot {
    pub fn value(&self, loc: LocationId) -> Option<&Value> {
        self.cells.get(&loc).map(|c| &c.value)
    }

    pub fn cell(&self, loc: LocationId) -> Option<&Cell> {
        self.cells.get(&loc)
    }

    pub fn contains(&self, loc: LocationId) -> bool {
        self.cells.contains_key(&loc)
    }

    pub fn locations(&self) -> impl Iterator<Item = LocationId> + '_ {
        self.cells.keys().copied()
    }

    pub fn registers(&self) -> Vec<(LocationId, &Value)> {
        self.cells
            .iter()
            .filter(|(_, c)| c.place.is_register())
            .map(|(l, c)| (*l, &c.value))
            .collect()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> Vec<FrameView<'_>> {
        let mut out: Vec<FrameView<'_>> = self
            .frames
            .iter()
            .map(|name| FrameView { name, bindings: Vec::new() })
            .collect();
        for (loc, cell) in &self.cells {
            if let Place::Binding { frame, name } = &cell.place {
                if let Some(f) = out.get_mut(*frame as usize) {
                    f.bindings.push(BindingView { name, loc: *loc, value: &cell.value });
                }
            }
        }
        out
    }

    /// Element locations of every live array, ordered by index.
    pub fn heap(&self) -> BTreeMap<HeapId, Vec<LocationId>> {
        let mut out: BTreeMap<HeapId, Vec<(u32, LocationId)>> =
            self.arrays.iter().map(|h| (*h, Vec::new())).collect();
        for (loc, cell) in &self.cells {
            if let Place::Element { array, index } = cell.place {
                out.entry(array).or_default().push((index, *loc));
            }
        }
        out.into_iter()
            .map(|(h, mut v)| {
                v.sort_unstable();
                (h, v.into_iter().map(|(_, l)| l).collect())
            })
            .collect()
    }

    pub fn array_values(&self, heap: HeapId) -> Option<Vec<Value>> {
        if !self.arrays.contains(&heap) {
            return None;
        }
        let mut elems: Vec<(u32, &Value)> = self
            .cells
            .values()
            .filter_map(|c| match c.place {
                Place::Element { array, index } if array == heap => Some((index, &c.value)),
                _ => None,
            })
            .collect();
        elems.sort_unstable_by_key(|(i, _)| *i);
        Some(elems.into_iter().map(|(_, v)| v.clone()).collect())
    }

    pub fn array_len(&self, heap: HeapId) -> Option<usize> {
        self.array_values(heap).map(|v| v.len())
    }

    /// Innermost visible binding of `name` in the global frame.
    pub fn global(&self, name: &str) -> Option<&Value> {
        self.binding(0, name).map(|(_, v)| v)
    }

    pub fn binding(&self, frame: u32, name: &str) -> Option<(LocationId, &Value)> {
        self.cells.iter().rev().find_map(|(l, c)| match &c.place {
            Place::Binding { frame: f, name: n } if *f == frame && &**n == name => Some((*l, &c.value)),
            _ => None,
        })
    }

    /// A value as plain JSON with arrays resolved, printed the way
    /// `JSON.stringify` prints array elements: non-finite numbers, functions
    /// and `undefined` become `null`. Cyclic arrays are cut off with `null`.
    pub fn plain(&self, v: &Value) -> serde_json::Value {
        self.plain_inner(v, &mut Vec::new())
    }

    fn plain_inner(&self, v: &Value, seen: &mut Vec<HeapId>) -> serde_json::Value {
        use serde_json::Value as J;
        match v {
            // Safe integers print without a fraction; this also folds -0 into 0.
            Value::Number(n) if n.fract() == 0.0 && n.abs() < 9_007_199_254_740_992.0 => J::from(*n as i64),
            Value::Number(n) => serde_json::Number::from_f64(*n).map_or(J::Null, J::Number),
            Value::Boolean(b) => J::Bool(*b),
            Value::String(s) => J::String(s.to_string()),
            Value::ArrayRef(h) => {
                if seen.contains(h) {
                    return J::Null;
                }
                let Some(items) = self.array_values(*h) else { return J::Null };
                seen.push(*h);
                let out = items.iter().map(|x| self.plain_inner(x, seen)).collect();
                seen.pop();
                J::Array(out)
            }
            Value::FunctionRef(_) | Value::Undefined => J::Null,
        }
    }

    /// Global bindings as a JSON object, leaving out functions and `undefined`
    /// like `JSON.stringify` does for object properties.
    pub fn plain_globals(&self) -> serde_json::Map<String, serde_json::Value> {
        let mut out = serde_json::Map::new();
        if let Some(global) = self.frames().first() {
            for b in &global.bindings {
                if matches!(b.value, Value::FunctionRef(_) | Value::Undefined) {
                    continue;
                }
                out.insert(b.name.to_string(), self.plain(b.value));
            }
        }
        out
    }

    // ---- mutation, shared by the interpreter and by replay ----

    pub(crate) fn push_frame(&mut self, name: Arc<str>) {
        self.frames.push(name);
    }

    pub(crate) fn pop_frame(&mut self) -> Result<(), MemoryError> {
        if self.frames.len() <= 1 {
            return Err(MemoryError::NoFrame);
        }
        let top = (self.frames.len() - 1) as u32;
        if self.cells.values().any(|c| matches!(c.place, Place::Binding { frame, .. } if frame == top)) {
            return Err(MemoryError::FrameNotEmpty(top as usize));
        }
        self.frames.pop();
        Ok(())
    }

    pub(crate) fn alloc_array(&mut self, heap: HeapId) {
        self.arrays.insert(heap);
    }

    pub(crate) fn free(&mut self, loc: LocationId) -> Result<(), MemoryError> {
        self.cells.remove(&loc).map(|_| ()).ok_or(MemoryError::UnknownLocation(loc))
    }

    pub(crate) fn write(&mut self, w: &FlowWrite, table: &LocationTable) -> Result<(), MemoryError> {
        if w.fresh {
            if self.cells.contains_key(&w.loc) {
                return Err(MemoryError::AlreadyLive(w.loc));
            }
            let place = table.place(w.loc).ok_or(MemoryError::NoPlacement(w.loc))?.clone();
            match &place {
                Place::Binding { frame, .. } if *frame as usize >= self.frames.len() => {
                    return Err(MemoryError::DanglingPlace { loc: w.loc, what: "frame" });
                }
                Place::Element { array, .. } if !self.arrays.contains(array) => {
                    return Err(MemoryError::DanglingPlace { loc: w.loc, what: "array" });
                }
                _ => {}
            }
            self.cells.insert(w.loc, Cell { place, value: w.value.clone() });
        } else {
            let cell = self.cells.get_mut(&w.loc).ok_or(MemoryError::UnknownLocation(w.loc))?;
            cell.value = w.value.clone();
        }
        Ok(())
    }
}

/// Applies writes in order; later writes to the same location win. Fresh writes
/// create their location using its recorded placement.
pub fn apply_writes(
    snapshot: &MemorySnapshot,
    writes: &[FlowWrite],
    table: &LocationTable,
) -> Result<MemorySnapshot, MemoryError> {
    let mut out = snapshot.clone();
    for w in writes {
        out.write(w, table)?;
    }
    Ok(out)
}

/// Applies a step's net effect: frees, frame pops, frame pushes, array allocation,
/// then writes.
pub fn apply_flow(
    snapshot: &MemorySnapshot,
    flow: &DataFlow,
    table: &LocationTable,
) -> Result<MemorySnapshot, MemoryError> {
    let mut out = snapshot.clone();
    apply_flow_in_place(&mut out, flow, table)?;
    Ok(out)
}

pub(crate) fn apply_flow_in_place(
    out: &mut MemorySnapshot,
    flow: &DataFlow,
    table: &LocationTable,
) -> Result<(), MemoryError> {
    for loc in &flow.lifecycle.frees {
        out.free(*loc)?;
    }
    for _ in 0..flow.lifecycle.popped_frames {
        out.pop_frame()?;
    }
    for name in &flow.lifecycle.pushed_frames {
        out.push_frame(name.clone());
    }
    for h in &flow.lifecycle.arrays {
        out.alloc_array(*h);
    }
    for w in &flow.writes {
        out.write(w, table)?;
    }
    Ok(())
}

impl Serialize for MemorySnapshot {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Slot<'a> {
            loc: LocationId,
            value: &'a Value,
        }
        #[derive(Serialize)]
        struct Array<'a> {
            id: HeapId,
            elements: Vec<Slot<'a>>,
        }
        let registers: Vec<Slot<'_>> =
            self.registers().into_iter().map(|(loc, value)| Slot { loc, value }).collect();
        let heap: Vec<Array<'_>> = self
            .heap()
            .into_iter()
            .map(|(id, locs)| Array {
                id,
                elements: locs
                    .into_iter()
                    .map(|loc| Slot { loc, value: &self.cells[&loc].value })
                    .collect(),
            })
            .collect();
        let mut st = s.serialize_struct("MemorySnapshot", 3)?;
        st.serialize_field("registers", &registers)?;
        st.serialize_field("frames", &self.frames())?;
        st.serialize_field("heap", &heap)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(loc: LocationId, value: f64, fresh: bool) -> FlowWrite {
        FlowWrite { loc, value: Value::Number(value), provenance: vec![], copy: false, fresh }
    }

    fn table_with_x() -> LocationTable {
        let mut t = LocationTable::default();
        t.alloc(Place::Binding { frame: 0, name: "x".into() });
        t
    }

    #[test]
    fn apply_empty_is_identity() {
        let s = MemorySnapshot::default();
        assert_eq!(apply_writes(&s, &[], &LocationTable::default()).unwrap(), s);
    }

    #[test]
    fn later_write_wins() {
        let t = table_with_x();
        let s = apply_writes(&MemorySnapshot::default(), &[write(0, 1.0, true)], &t).unwrap();
        assert_eq!(s.global("x"), Some(&Value::Number(1.0)));
        let s2 = apply_writes(&s, &[write(0, 2.0, false), write(0, 5.0, false)], &t).unwrap();
        assert_eq!(s2.global("x"), Some(&Value::Number(5.0)));
    }

    #[test]
    fn unknown_location_is_an_error() {
        let t = table_with_x();
        let err = apply_writes(&MemorySnapshot::default(), &[write(0, 1.0, false)], &t).unwrap_err();
        assert_eq!(err, MemoryError::UnknownLocation(0));
        let err = apply_writes(&MemorySnapshot::default(), &[write(7, 1.0, true)], &t).unwrap_err();
        assert_eq!(err, MemoryError::NoPlacement(7));
    }

    #[test]
    fn frame_pop_requires_empty_frame() {
        let mut t = LocationTable::default();
        t.alloc(Place::Binding { frame: 1, name: "n".into() });
        let mut s = MemorySnapshot::default();
        s.push_frame("f".into());
        s.write(&write(0, 3.0, true), &t).unwrap();
        assert_eq!(s.pop_frame(), Err(MemoryError::FrameNotEmpty(1)));
        s.free(0).unwrap();
        s.pop_frame().unwrap();
        assert_eq!(s, MemorySnapshot::default());
    }
}
