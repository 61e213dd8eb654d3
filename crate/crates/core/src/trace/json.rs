use std::fmt::Write as _;

use serde_json::{json, Map, Value as Json};

use super::{Place, StepId, Trace};
use crate::interpreter::LocationId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SnapshotMode {
    /// Snapshots are left for the reader to reconstruct from the operations.
    #[default]
    None,
    /// Every step carries its `pre` and `post` memory.
    Full,
}

/// The whole trace as JSON: `{source, seed, totalOps, locations, frames, root, error?}`.
pub fn trace_to_json(trace: &Trace, snapshots: SnapshotMode) -> Json {
    let mut top = Map::new();
    top.insert("source".into(), json!(trace.program().source()));
    top.insert("seed".into(), json!(trace.seed()));
    top.insert("totalOps".into(), json!(trace.total_ops()));
    top.insert("locations".into(), json!(trace.locations()));
    top.insert("frames".into(), json!(trace.frames()));
    top.insert("stubs".into(), json!(trace.stubs()));
    top.insert("root".into(), step_json(trace, 0, snapshots));
    if let Some(e) = trace.error() {
        top.insert("error".into(), json!(e));
    }
    Json::Object(top)
}

fn step_json(trace: &Trace, id: StepId, snapshots: SnapshotMode) -> Json {
    let s = trace.step(id);
    let mut m = Map::new();
    m.insert("id".into(), json!(s.id));
    m.insert("astNode".into(), json!(s.ast_node));
    m.insert("kind".into(), json!(s.kind));
    m.insert("startTick".into(), json!(s.start_tick));
    m.insert("endTick".into(), json!(s.end_tick));
    m.insert("reads".into(), json!(s.flow.reads));
    m.insert("writes".into(), json!(s.flow.writes));
    if !s.flow.lifecycle.is_empty() {
        m.insert("lifecycle".into(), json!(s.flow.lifecycle));
    }
    if s.folded {
        m.insert("folded".into(), json!(true));
    }
    if let Some(op) = trace.primitive(id) {
        m.insert("op".into(), json!(op));
    }
    if snapshots == SnapshotMode::Full {
        m.insert("pre".into(), json!(trace.pre(id).expect("replay")));
        m.insert("post".into(), json!(trace.post(id).expect("replay")));
    }
    let children: Vec<Json> = s.children.iter().map(|c| step_json(trace, *c, snapshots)).collect();
    m.insert("children".into(), Json::Array(children));
    Json::Object(m)
}

impl Trace {
    /// Short human name of a location: `x`, `x@2` in a nested frame, `#0[3]`, `%17`.
    pub fn describe_loc(&self, loc: LocationId) -> String {
        match self.locations.place(loc) {
            Some(Place::Binding { frame: 0, name }) => name.to_string(),
            Some(Place::Binding { frame, name }) => format!("{name}@{frame}"),
            Some(Place::Element { array, index }) => format!("#{array}[{index}]"),
            Some(Place::Register) => format!("%{loc}"),
            None => format!("?{loc}"),
        }
    }

    /// Source text of a step's node on one line, shortened to `width` characters.
    pub fn snippet(&self, id: StepId, width: usize) -> String {
        let text = self.program().text(self.step(id).ast_node);
        let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
        if flat.chars().count() <= width {
            flat
        } else {
            let cut: String = flat.chars().take(width.saturating_sub(1)).collect();
            format!("{cut}…")
        }
    }
}

/// Indented step tree down to `depth` levels with per-step read and write summaries.
pub fn outline(trace: &Trace, depth: usize) -> String {
    let mut out = String::new();
    outline_step(trace, 0, 0, depth, &mut out);
    if let Some(e) = trace.error() {
        let _ = writeln!(out, "error at tick {}: {}", e.tick, e);
    }
    out
}

fn outline_step(trace: &Trace, id: StepId, level: usize, max: usize, out: &mut String) {
    let s = trace.step(id);
    let reads: Vec<String> = s
        .flow
        .reads
        .iter()
        .filter(|l| !trace.locations.is_register(**l))
        .map(|l| trace.describe_loc(*l))
        .collect();
    let writes: Vec<String> = s
        .flow
        .writes
        .iter()
        .filter(|w| !trace.locations.is_register(w.loc))
        .map(|w| format!("{}={}", trace.describe_loc(w.loc), w.value))
        .collect();
    let mark = match trace.condition(id) {
        Some(true) => " ✓",
        Some(false) => " ✗",
        None => "",
    };
    let _ = write!(
        out,
        "{:indent$}{} {} [{}..{}){} {}",
        "",
        s.id,
        s.kind,
        s.start_tick,
        s.end_tick,
        mark,
        trace.snippet(id, 40),
        indent = level * 2
    );
    if !reads.is_empty() {
        let _ = write!(out, "  reads {}", reads.join(", "));
    }
    if !writes.is_empty() {
        let _ = write!(out, "  writes {}", writes.join(", "));
    }
    out.push('\n');
    if level < max {
        for c in trace.decompose(id) {
            outline_step(trace, c, level + 1, max, out);
        }
    }
}

/// The outline as JSON: `{id, kind, startTick, endTick, snippet, condition?, reads, writes, children}`.
pub fn outline_to_json(trace: &Trace, depth: usize) -> Json {
    outline_json(trace, 0, 0, depth)
}

fn outline_json(trace: &Trace, id: StepId, level: usize, max: usize) -> Json {
    let s = trace.step(id);
    let named = |l: &LocationId| !trace.locations.is_register(*l);
    let mut m = Map::new();
    m.insert("id".into(), json!(s.id));
    m.insert("kind".into(), json!(s.kind));
    m.insert("startTick".into(), json!(s.start_tick));
    m.insert("endTick".into(), json!(s.end_tick));
    m.insert("snippet".into(), json!(trace.snippet(id, 40)));
    if let Some(c) = trace.condition(id) {
        m.insert("condition".into(), json!(c));
    }
    let reads: Vec<String> = s.flow.reads.iter().filter(|l| named(l)).map(|l| trace.describe_loc(*l)).collect();
    m.insert("reads".into(), json!(reads));
    let writes: Vec<Json> = s
        .flow
        .writes
        .iter()
        .filter(|w| named(&w.loc))
        .map(|w| json!({ "loc": trace.describe_loc(w.loc), "value": w.value }))
        .collect();
    m.insert("writes".into(), json!(writes));
    let children: Vec<Json> = if level < max {
        trace.decompose(id).into_iter().map(|c| outline_json(trace, c, level + 1, max)).collect()
    } else {
        Vec::new()
    };
    m.insert("children".into(), Json::Array(children));
    Json::Object(m)
}
