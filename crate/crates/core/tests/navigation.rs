mod common;

use std::sync::Arc;

use common::run;
use crosstrace_core::abstraction::{Action, CursorTarget, LinearEntry, Policy, ViewState};
use crosstrace_core::Trace;
use proptest::prelude::*;

const PROGRAMS: [&str; 4] = [
    "let s = 0;\nfor (let i = 0; i < 7; i++) {\n  s = s + i;\n}\n",
    "function h(x) { return x + 1; }\nfunction g(x) { return h(x) * 2; }\nfunction f(x) { return g(x) - 3; }\nlet r = f(g(h(1)));\n",
    "function fact(n) {\n  if (n <= 1) { return 1; }\n  return n * fact(n - 1);\n}\nlet a = [3, 1, 2];\nlet k = fact(4);\nwhile (a[0] > 0) { a[0] = a[0] - 1; }\n",
    "let x = 1;\nlet y = 2;\nif (x > y) { x = y; } else { y = x; }\nlet t = x;\nx = y;\ny = t;\n",
];

fn traces() -> Vec<Arc<Trace>> {
    PROGRAMS.iter().map(|p| run(p)).collect()
}

fn assert_tiles(lin: &[LinearEntry], total: usize) {
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

fn boundaries(lin: &[LinearEntry]) -> Vec<usize> {
    std::iter::once(0).chain(lin.iter().map(|e| e.end)).collect()
}

/// Picks a concrete action against the current view so most choices are valid.
fn choose(view: &ViewState, kind: u8, pick: usize, delta: i64) -> Action {
    let mut steps = Vec::new();
    let mut groups = Vec::new();
    for v in view.visible().walk() {
        steps.extend(v.step_id);
        groups.extend(v.group_id);
    }
    let total = view.trace().total_ops();
    let step_id = if steps.is_empty() { 0 } else { steps[pick % steps.len()] };
    match kind % 9 {
        0 | 1 => Action::Expand { step_id },
        2 => Action::Collapse { step_id },
        3 => Action::ToggleGroup { group_id: if groups.is_empty() { step_id } else { groups[pick % groups.len()] } },
        4 => Action::ToggleCompact { step_id },
        5 => Action::Unroll { step_id },
        6 => Action::MoveCursor(CursorTarget::Delta { delta }),
        7 => Action::MoveCursor(CursorTarget::Tick { tick: pick % (total + 2), fraction: 0.0 }),
        _ => {
            let len = view.trace().program().source().len();
            let a = pick % (len + 1);
            let b = (a + (delta.unsigned_abs() as usize)).min(len);
            Action::SelectSource { start_offset: a, end_offset: b }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_sessions(prog in 0..PROGRAMS.len(), disclosure in any::<bool>(),
                       script in prop::collection::vec((any::<u8>(), any::<usize>(), -6i64..7), 0..25)) {
        let t = traces()[prog].clone();
        let total = t.total_ops();
        let policy = Policy { disclosure };
        let mut view = ViewState::initial(t.clone(), policy);
        for (kind, pick, delta) in script {
            let action = choose(&view, kind, pick, delta);
            let before = view.to_json();
            if view.apply(&action).is_err() {
                prop_assert_eq!(view.to_json(), before);
            }
            assert_tiles(&view.linearize(), total);
            prop_assert!(view.cursor().tick <= total);
        }
        let replayed = ViewState::replay(t, policy, view.log()).unwrap();
        prop_assert_eq!(replayed.to_json().to_string(), view.to_json().to_string());
    }

    #[test]
    fn cursor_moves_round_trip(prog in 0..PROGRAMS.len(), start in any::<usize>(), n in 1i64..6) {
        let t = traces()[prog].clone();
        let mut view = ViewState::initial(t, Policy::default());
        let b = boundaries(&view.linearize());
        let i = start % b.len();
        view.move_cursor(CursorTarget::Tick { tick: b[i], fraction: 0.0 }).unwrap();
        let home = view.cursor();
        if i + (n as usize) < b.len() {
            view.move_cursor(CursorTarget::Delta { delta: n }).unwrap();
            prop_assert_eq!(view.cursor().tick, b[i + n as usize]);
            view.move_cursor(CursorTarget::Delta { delta: -n }).unwrap();
            prop_assert_eq!(view.cursor(), home);
        }
        if i >= n as usize {
            view.move_cursor(CursorTarget::Delta { delta: -n }).unwrap();
            view.move_cursor(CursorTarget::Delta { delta: n }).unwrap();
            prop_assert_eq!(view.cursor(), home);
        }
    }

    #[test]
    fn expand_then_collapse_restores_view(prog in 0..PROGRAMS.len(), pick in any::<usize>()) {
        let t = traces()[prog].clone();
        let view = ViewState::initial(t, Policy::default());
        let mut candidates = Vec::new();
        for v in view.visible().walk() {
            if let (Some(s), true) = (v.step_id, v.children.is_empty()) {
                candidates.push(s);
            }
        }
        prop_assume!(!candidates.is_empty());
        let s = candidates[pick % candidates.len()];
        let mut probe = view.clone();
        if probe.expand(s).is_ok() {
            probe.collapse(s).unwrap();
            prop_assert_eq!(probe.visible(), view.visible());
        }
    }
}
