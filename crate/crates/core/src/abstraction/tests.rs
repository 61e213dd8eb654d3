use super::*;
use crate::interpreter::{execute, ExecConfig};
use crate::syntax::parse;

fn trace(src: &str) -> Arc<Trace> {
    Arc::new(execute(&parse(src).unwrap(), &ExecConfig::default()).unwrap())
}

fn view(src: &str, disclosure: bool) -> ViewState {
    ViewState::initial(trace(src), Policy { disclosure })
}

fn top(v: &ViewState) -> &[VisibleStep] {
    &v.visible().children
}

fn find_kind(v: &ViewState, kind: StepKind) -> StepId {
    v.trace().steps().iter().find(|s| s.kind == kind).unwrap().id
}

fn first_node(v: &ViewState, kind: NodeKind, text: &str) -> StepId {
    let t = v.trace();
    t.steps()
        .iter()
        .find(|s| s.kind == StepKind::Node(kind) && t.program().text(s.ast_node) == text)
        .unwrap_or_else(|| panic!("no {kind:?} step for {text}"))
        .id
}

fn assert_tiles(v: &ViewState) {
    let lin = v.linearize();
    let total = v.trace().total_ops();
    if total == 0 {
        assert!(lin.is_empty());
        return;
    }
    assert_eq!(lin.first().unwrap().start, 0);
    assert_eq!(lin.last().unwrap().end, total);
    for w in lin.windows(2) {
        assert_eq!(w[0].end, w[1].start);
    }
    assert!(lin.iter().all(|e| e.start < e.end));
}

const LOOP7: &str = "let s = 0; for (let i = 0; i < 7; i++) { s += i; }";

fn loop_entry(v: &ViewState) -> &VisibleStep {
    top(v)
        .iter()
        .find(|e| e.kind == Some(StepKind::Node(NodeKind::ForStatement)))
        .unwrap()
}

#[test]
fn flat_script_without_disclosure() {
    let src: String = (0..10).map(|i| format!("let v{i} = {i};\n")).collect();
    let v = view(&src, false);
    assert_eq!(top(&v).len(), 10);
    assert!(top(&v).iter().all(|e| e.render_kind == RenderKind::Full && e.children.is_empty()));
    assert_tiles(&v);
}

#[test]
fn seven_iteration_loop_abbreviation() {
    let mut v = view(LOOP7, true);
    let lp = loop_entry(&v);
    let kinds: Vec<_> = lp.children.iter().map(|e| (e.kind, e.render_kind)).collect();
    assert_eq!(
        kinds,
        vec![
            (Some(StepKind::LoopInit), RenderKind::Full),
            (Some(StepKind::Iteration), RenderKind::Full),
            (None, RenderKind::DotGroup),
            (Some(StepKind::LoopTest), RenderKind::CrossMark),
        ]
    );
    let iter1 = &lp.children[1];
    assert_eq!(iter1.children.len(), 3);
    assert_eq!(iter1.children[0].render_kind, RenderKind::CheckMark);
    let group = &lp.children[2];
    assert_eq!(group.steps.len(), 6);
    assert_eq!(group.children.len(), 3);
    assert_eq!(group.presentation, Presentation::DotGroup { aggregated: true });
    assert_eq!(group.children[1].steps.len(), 4);
    assert_tiles(&v);

    // Linearized: init, test, body, update, three dots, final test.
    assert_eq!(v.linearize().iter().filter(|e| e.render_kind == RenderKind::Dot).count(), 3);

    let gid = group.group_id.unwrap();
    v.toggle_group(gid).unwrap();
    let group = &loop_entry(&v).children[2];
    assert_eq!(group.children.len(), 6);
    assert!(group.children.iter().all(|d| d.render_kind == RenderKind::Dot));
    assert_tiles(&v);

    let loop_id = loop_entry(&v).step_id.unwrap();
    let before = v.linearize();
    v.toggle_unroll(loop_id).unwrap();
    let lp = loop_entry(&v);
    let iters: Vec<_> = lp.children.iter().filter(|e| e.kind == Some(StepKind::Iteration)).collect();
    assert_eq!(iters.len(), 7);
    assert!(iters.iter().all(|i| i.render_kind == RenderKind::Full && i.children.len() == 3));
    assert_eq!(lp.children.len(), 9);
    assert_tiles(&v);
    v.toggle_unroll(loop_id).unwrap();
    assert_eq!(v.linearize(), before);
}

#[test]
fn disclosure_off_shows_every_iteration() {
    let v = view(LOOP7, false);
    assert!(loop_entry(&v).children.is_empty());
    let mut v = v;
    let id = loop_entry(&v).step_id.unwrap();
    v.expand(id).unwrap();
    let iters = loop_entry(&v).children.iter().filter(|e| e.kind == Some(StepKind::Iteration)).count();
    assert_eq!(iters, 7);
}

#[test]
fn small_groups_have_no_middle_dot() {
    let mut v = view("for (let i = 0; i < 3; i++) {}", true);
    let group = loop_entry(&v).children[2].clone();
    assert_eq!(group.steps.len(), 2);
    assert_eq!(group.children.len(), 2);
    v.toggle_group(group.group_id.unwrap()).unwrap();
    assert_eq!(loop_entry(&v).children[2].children.len(), 2);
}

#[test]
fn progressive_closure_on_nested_calls() {
    let src = "function h(a) { return a + 1; } function g(a) { return a * 2; } function f(a) { return a - 1; } let x = 1; f(g(h(x)));";
    let mut v = view(src, true);
    let stmt = first_node(&v, NodeKind::ExpressionStatement, "f(g(h(x)));");
    let f = first_node(&v, NodeKind::CallExpression, "f(g(h(x)))");
    let g = first_node(&v, NodeKind::CallExpression, "g(h(x))");
    let h = first_node(&v, NodeKind::CallExpression, "h(x)");
    v.expand(stmt).unwrap();
    v.expand(f).unwrap();
    assert_eq!(v.presentation(f), Some(Presentation::Expanded));
    v.expand(g).unwrap();
    assert_eq!(v.presentation(f), Some(Presentation::Compact));
    assert_eq!(v.presentation(g), Some(Presentation::Expanded));
    v.expand(h).unwrap();
    assert_eq!(v.presentation(f), Some(Presentation::Abbreviated));
    assert_eq!(v.presentation(g), Some(Presentation::Compact));
    assert_eq!(v.presentation(h), Some(Presentation::Expanded));
    assert_tiles(&v);
    let json = v.to_json().to_string();
    assert!(json.contains("\"Abbreviated\""));

    // Collapsing h restores the previous stage.
    v.collapse(h).unwrap();
    assert_eq!(v.presentation(f), Some(Presentation::Compact));
    assert_eq!(v.presentation(g), Some(Presentation::Expanded));
}

#[test]
fn function_body_shows_last_four_steps() {
    let src = "function f() { let a = 1; let b = 2; let c = 3; let d = 4; let e = 5; let r = a + b + c + d + e; return r; } let out = f();";
    let mut v = view(src, true);
    let frame = find_kind(&v, StepKind::FunctionFrame);
    let decl = first_node(&v, NodeKind::VariableDeclaration, "let out = f();");
    v.expand(decl).unwrap();
    let call = first_node(&v, NodeKind::CallExpression, "f()");
    v.expand(call).unwrap();
    v.expand(frame).unwrap();
    let e = v.visible().find(frame).unwrap();
    assert_eq!(e.render_kind, RenderKind::Frame);
    assert_eq!(e.children.len(), 5);
    assert_eq!(e.children[0].render_kind, RenderKind::DotGroup);
    assert_eq!(e.children[0].steps.len(), 3);
    assert_eq!(e.children[0].children.len(), 3);
    assert!(e.children[1..].iter().all(|c| c.step_id.is_some() && c.render_kind != RenderKind::Dot));
    assert_tiles(&v);
}

#[test]
fn six_statement_body_groups_two() {
    let src = "function f() { let a = 1; let b = 2; let c = 3; let d = 4; let e = 5; return a; } f();";
    let mut v = view(src, true);
    let frame = find_kind(&v, StepKind::FunctionFrame);
    for s in v.trace().ancestors(frame).collect::<Vec<_>>().into_iter().rev().skip(1) {
        v.expand(s).unwrap();
    }
    v.expand(frame).unwrap();
    let e = v.visible().find(frame).unwrap();
    let shape: Vec<_> = e.children.iter().map(|c| (c.render_kind, c.steps.len())).collect();
    assert_eq!(
        shape,
        vec![
            (RenderKind::DotGroup, 2),
            (RenderKind::Full, 0),
            (RenderKind::Full, 0),
            (RenderKind::Full, 0),
            (RenderKind::Full, 0),
        ]
    );
}

#[test]
fn expanding_another_iteration_closes_the_previous_one() {
    let mut v = view(LOOP7, true);
    let gid = loop_entry(&v).children[2].group_id.unwrap();
    v.toggle_group(gid).unwrap();
    let dots: Vec<StepId> = loop_entry(&v).children[2].children.iter().map(|d| d.step_id.unwrap()).collect();
    let (iter2, iter3) = (dots[0], dots[1]);
    v.expand(iter2).unwrap();
    assert_eq!(v.visible().find(iter2).unwrap().children.len(), 3);
    v.expand(iter3).unwrap();
    let e2 = v.visible().find(iter2).unwrap();
    assert_eq!(e2.render_kind, RenderKind::Dot);
    assert!(e2.children.is_empty());
    assert_eq!(v.visible().find(iter3).unwrap().children.len(), 3);
    assert_tiles(&v);
}

#[test]
fn expand_leaf_is_rejected_without_change() {
    let mut v = view("let x = 1;", true);
    let leaf = v.trace().steps().iter().find(|s| s.is_leaf() && !s.folded).unwrap().id;
    let decl = top(&v)[0].step_id.unwrap();
    v.expand(decl).unwrap();
    let before = v.to_json();
    let err = v.expand(leaf).unwrap_err();
    assert_eq!(err, ViewError::NotDecomposable(leaf));
    assert_eq!(v.to_json(), before);
    assert_eq!(v.log().len(), 1);
}

#[test]
fn collapse_root_and_inverse() {
    let mut v = view(LOOP7, true);
    v.collapse(0).unwrap();
    assert!(v.visible().children.is_empty());
    assert_eq!(v.linearize().len(), 1);
    v.expand(0).unwrap();
    let before = v.linearize();
    let decl = top(&v)[0].step_id.unwrap();
    v.expand(decl).unwrap();
    assert_ne!(v.linearize(), before);
    v.collapse(decl).unwrap();
    assert_eq!(v.linearize(), before);
}

#[test]
fn compact_toggle_is_an_involution() {
    let mut v = view(LOOP7, true);
    let decl = top(&v)[0].step_id.unwrap();
    let before = v.to_json()["visibleSteps"].clone();
    v.toggle_compact(decl).unwrap();
    assert_eq!(v.visible().find(decl).unwrap().render_kind, RenderKind::Compact);
    v.toggle_compact(decl).unwrap();
    assert_eq!(v.to_json()["visibleSteps"], before);
}

#[test]
fn unroll_rejects_non_loops() {
    let mut v = view(LOOP7, true);
    let decl = top(&v)[0].step_id.unwrap();
    assert_eq!(v.toggle_unroll(decl), Err(ViewError::NotALoop(decl)));
}

#[test]
fn cursor_moves_over_visible_boundaries() {
    let mut v = view(LOOP7, true);
    v.move_cursor(CursorTarget::Delta { delta: 3 }).unwrap();
    let at = v.cursor();
    v.move_cursor(CursorTarget::Delta { delta: 2 }).unwrap();
    v.move_cursor(CursorTarget::Delta { delta: -2 }).unwrap();
    assert_eq!(v.cursor(), at);

    // The three dots of the group are three stops.
    let group = &loop_entry(&v).children[2];
    let (gs, ge) = (group.start_tick, group.end_tick);
    v.move_cursor(CursorTarget::Tick { tick: gs, fraction: 0.0 }).unwrap();
    let mut stops = 0;
    while v.cursor().tick < ge {
        v.move_cursor(CursorTarget::Delta { delta: 1 }).unwrap();
        stops += 1;
    }
    assert_eq!(v.cursor().tick, ge);
    assert_eq!(stops, 3);

    let lp = loop_entry(&v).step_id.unwrap();
    v.move_cursor(CursorTarget::StepEnd { step_end: lp }).unwrap();
    assert_eq!(v.cursor().tick, v.trace().step(lp).end_tick);
    let total = v.trace().total_ops();
    assert!(matches!(
        v.move_cursor(CursorTarget::Tick { tick: total + 1, fraction: 0.0 }),
        Err(ViewError::OutOfRange { .. })
    ));
    v.move_cursor(CursorTarget::Delta { delta: 1000 }).unwrap();
    assert_eq!(v.cursor().tick, total);
    v.move_cursor(CursorTarget::Delta { delta: -1000 }).unwrap();
    assert_eq!(v.cursor().tick, 0);
}

#[test]
fn forward_steps_are_monotonic() {
    let mut v = view(LOOP7, true);
    let mut last = v.cursor().position();
    while v.cursor().tick < v.trace().total_ops() {
        v.move_cursor(CursorTarget::Delta { delta: 1 }).unwrap();
        assert!(v.cursor().position() > last);
        last = v.cursor().position();
    }
}

const FACT: &str = "function fact(n) { if (n <= 1) { return 1; } return n * fact(n - 1); } let r = fact(3);";

#[test]
fn selecting_base_case_reveals_call_chain() {
    let mut v = view(FACT, true);
    let start = FACT.find("return 1;").unwrap();
    let targets = v.select_source(start, start + "return 1;".len()).unwrap();
    assert_eq!(targets.len(), 1);
    let t = targets[0];
    assert!(v.visible().find(t).is_some());
    assert_eq!(v.cursor().tick, v.trace().step(t).end_tick);
    assert_tiles(&v);

    // Every enclosing frame is active inside the base case.
    v.move_cursor(CursorTarget::Tick { tick: v.trace().step(t).start_tick, fraction: 0.0 }).unwrap();
    let frames: Vec<StepId> = v.trace().frames().iter().map(|f| f.step).collect();
    assert_eq!(frames.len(), 3);
    for f in frames {
        let s = v.trace().step(f);
        assert_eq!(
            v.frame_cursor_state(f).unwrap(),
            FrameCursor::During { local_tick: v.cursor().tick - s.start_tick }
        );
    }
}

#[test]
fn selecting_unexecuted_branch_changes_nothing() {
    let src = "let x = 1; if (x > 5) { x = 2; } else { x = 3; }";
    let mut v = view(src, true);
    let before = v.to_json();
    let s = src.find("{ x = 2; }").unwrap();
    assert!(v.select_source(s, s + 10).unwrap().is_empty());
    assert_eq!(v.to_json(), before);
    let x = src.find("x = 3").unwrap();
    assert_eq!(v.select_source(x, x + 5).unwrap().len(), 1);
    assert!(v.select_source(5, 500).is_err());
}

#[test]
fn selecting_loop_body_yields_each_iteration() {
    let mut v = view(LOOP7, true);
    let s = LOOP7.find("{ s += i; }").unwrap();
    let targets = v.select_source(s, s + "{ s += i; }".len()).unwrap();
    assert_eq!(targets.len(), 7);
    let ticks: Vec<Tick> = targets.iter().map(|t| v.trace().step(*t).start_tick).collect();
    assert!(ticks.windows(2).all(|w| w[0] < w[1]));
    assert!(v.visible().find(targets[0]).is_some());
}

#[test]
fn frame_cursor_boundaries() {
    let mut v = view(FACT, true);
    let f = v.trace().frames()[0].step;
    let s = v.trace().step(f).clone();
    assert_eq!(v.frame_cursor_state(f).unwrap(), FrameCursor::Before);
    v.move_cursor(CursorTarget::Tick { tick: s.start_tick, fraction: 0.0 }).unwrap();
    assert_eq!(v.frame_cursor_state(f).unwrap(), FrameCursor::During { local_tick: 0 });
    v.move_cursor(CursorTarget::Tick { tick: s.end_tick, fraction: 0.0 }).unwrap();
    assert_eq!(v.frame_cursor_state(f).unwrap(), FrameCursor::After);
    assert_eq!(v.frame_cursor_state(0), Err(ViewError::NotAFrame(0)));
}

#[test]
fn if_renders_marks_and_stubs() {
    let src = "let x = 1; if (x > 5) { x = 2; } x = 4;";
    let mut v = view(src, true);
    let iff = top(&v)[1].step_id.unwrap();
    v.expand(iff).unwrap();
    let e = v.visible().find(iff).unwrap();
    assert_eq!(e.children.len(), 2);
    assert_eq!(e.children[0].render_kind, RenderKind::CrossMark);
    assert_eq!(e.children[1].render_kind, RenderKind::Stub);
    assert_eq!(v.to_json()["stubs"].as_array().unwrap().len(), 1);
    assert_tiles(&v);
}

#[test]
fn landmarks_mask_executed_parts() {
    let v = view("let x = 1 + 2; for (let i = 0; i < 2; i++) { x = x + i; }", true);
    assert_eq!(top(&v)[0].landmark, "let x = ■;");
    let lp = loop_entry(&v);
    assert_eq!(lp.landmark, "for (■; ■; ■) ■");
}

#[test]
fn replay_reproduces_view() {
    let mut v = view(FACT, true);
    let start = FACT.find("return 1;").unwrap();
    v.select_source(start, start + 9).unwrap();
    v.move_cursor(CursorTarget::Delta { delta: -2 }).unwrap();
    let _ = v.expand(9999);
    let again = ViewState::replay(v.trace().clone(), v.policy(), v.log()).unwrap();
    assert_eq!(again.to_json().to_string(), v.to_json().to_string());
}

#[test]
fn actions_round_trip_through_json() {
    let actions = vec![
        Action::Expand { step_id: 3 },
        Action::Collapse { step_id: 3 },
        Action::ToggleGroup { group_id: 4 },
        Action::ToggleCompact { step_id: 5 },
        Action::Unroll { step_id: 6 },
        Action::MoveCursor(CursorTarget::Delta { delta: -2 }),
        Action::MoveCursor(CursorTarget::Tick { tick: 7, fraction: 0.5 }),
        Action::MoveCursor(CursorTarget::StepEnd { step_end: 8 }),
        Action::SelectSource { start_offset: 1, end_offset: 4 },
    ];
    for a in actions {
        let j = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<Action>(&j).unwrap(), a, "{j}");
    }
    let a: Action = serde_json::from_str(r#"{"type":"expand","stepId":12}"#).unwrap();
    assert_eq!(a, Action::Expand { step_id: 12 });
    let a: Action = serde_json::from_str(r#"{"type":"moveCursor","tick":3}"#).unwrap();
    assert_eq!(a, Action::MoveCursor(CursorTarget::Tick { tick: 3, fraction: 0.0 }));
}

#[test]
fn empty_program_view() {
    let v = view("", true);
    assert!(v.linearize().is_empty());
    assert_eq!(v.cursor(), Cursor::at(0));
}
