//! Plain-text renderings for `--format pretty`.

use std::fmt::Write as _;

use crosstrace_core::abstraction::{FrameCursor, Presentation, RenderKind, ViewState, VisibleStep};
use crosstrace_core::dataview::DataPanel;
use crosstrace_core::syntax::{Node, Program};
use crosstrace_core::Trace;

fn marker(v: &VisibleStep) -> &'static str {
    match v.render_kind {
        RenderKind::Full if v.presentation == Presentation::Expanded => "▾",
        RenderKind::Full => "▸",
        RenderKind::Compact => "◦",
        RenderKind::Dot => "•",
        RenderKind::DotGroup => "⋯",
        RenderKind::Stub => "·",
        RenderKind::CheckMark => "✓",
        RenderKind::CrossMark => "✗",
        RenderKind::Frame => "▣",
    }
}

fn label(v: &VisibleStep) -> String {
    match (v.step_id, v.group_id) {
        (Some(id), _) => format!("#{id}"),
        (None, Some(g)) => format!("group {g} ({} steps)", v.steps.len()),
        (None, None) if !v.steps.is_empty() => format!("{} steps", v.steps.len()),
        _ => "stub".into(),
    }
}

fn shorten(s: &str, width: usize) -> String {
    if s.chars().count() <= width {
        s.to_string()
    } else {
        let cut: String = s.chars().take(width.saturating_sub(1)).collect();
        format!("{cut}…")
    }
}

/// The visible step tree with the cursor position and frame states.
pub fn render_view(view: &ViewState) -> String {
    let mut out = String::new();
    let c = view.cursor();
    let total = view.trace().total_ops();
    let _ = writeln!(out, "cursor {}/{total}{}", c.tick, if c.fraction > 0.0 { format!(" +{:.2}", c.fraction) } else { String::new() });
    let mut stack = vec![(view.visible(), 0usize)];
    while let Some((v, depth)) = stack.pop() {
        let here = v.step_id.is_some() && v.start_tick < v.end_tick && v.end_tick == c.tick;
        let _ = writeln!(
            out,
            "{}{:indent$}{} {} [{}..{}) {}",
            if here { "→" } else { " " },
            "",
            marker(v),
            label(v),
            v.start_tick,
            v.end_tick,
            shorten(&v.landmark, 48),
            indent = depth * 2
        );
        stack.extend(v.children.iter().rev().map(|c| (c, depth + 1)));
    }
    for (step, depth, state) in view.frames() {
        let state = match state {
            FrameCursor::Before => "before".to_string(),
            FrameCursor::During { local_tick } => format!("during +{local_tick}"),
            FrameCursor::After => "after".to_string(),
        };
        let _ = writeln!(out, "frame #{step} depth {depth}: {state}");
    }
    out
}

/// Memory at the cursor with the current step's events.
pub fn render_data(trace: &Trace, panel: &DataPanel) -> String {
    let mut out = String::new();
    for f in panel.memory.frames() {
        let _ = writeln!(out, "{}:", f.name);
        for b in &f.bindings {
            let _ = writeln!(out, "  {} = {}", b.name, panel.memory.plain(b.value));
        }
    }
    for e in &panel.events {
        let sources: Vec<String> = e.sources.iter().map(|l| trace.describe_loc(*l)).collect();
        let _ = writeln!(out, "{:?} {} <- [{}]", e.kind, trace.describe_loc(e.target.loc), sources.join(", "));
    }
    for r in &panel.residuals {
        let _ = writeln!(out, "residual {} was {} (rank {})", trace.describe_loc(r.location), panel.memory.plain(&r.old_value), r.rank);
    }
    out
}

/// Indented AST with node ids and roles.
pub fn render_ast(program: &Program) -> String {
    let mut out = String::new();
    fn walk(p: &Program, n: &Node, role: Option<String>, depth: usize, out: &mut String) {
        let role = role.map(|r| format!("{r}: ")).unwrap_or_default();
        let text: String = p.text(n.id).split_whitespace().collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{:indent$}{role}{} #{} {}", "", n.kind, n.id, shorten(&text, 40), indent = depth * 2);
        for c in &n.children {
            walk(p, p.node(c.node), Some(format!("{:?}", c.role)), depth + 1, out);
        }
    }
    walk(program, program.root(), None, 0, &mut out);
    out
}
