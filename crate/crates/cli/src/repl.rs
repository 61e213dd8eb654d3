use crosstrace_core::abstraction::{Action, CursorTarget};

/// One line of input to `navigate`.
#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Act(Action),
    View,
    Data,
    Log,
    Help,
    Quit,
}

pub const HELP: &str = "\
commands:
  expand <step>        collapse <step>      group <group>
  compact <step>       unroll <step>
  next [n]             prev [n]             tick <t> [fraction]
  end <step>           select <start> <end>
  view  data  log  help  quit
or any action as JSON, e.g. {\"type\":\"expand\",\"stepId\":3}";

fn num<T: std::str::FromStr>(arg: Option<&str>, what: &str) -> Result<T, String> {
    let a = arg.ok_or_else(|| format!("missing {what}"))?;
    a.parse().map_err(|_| format!("bad {what}: {a}"))
}

pub fn parse_command(line: &str) -> Result<Option<Command>, String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    if line.starts_with('{') {
        return serde_json::from_str(line).map(|a| Some(Command::Act(a))).map_err(|e| e.to_string());
    }
    let mut words = line.split_whitespace();
    let head = words.next().unwrap_or_default();
    let a = words.next();
    let b = words.next();
    let act = |x| Ok(Some(Command::Act(x)));
    let step = |w| num::<u32>(w, "step id");
    match head {
        "expand" | "x" => act(Action::Expand { step_id: step(a)? }),
        "collapse" | "c" => act(Action::Collapse { step_id: step(a)? }),
        "group" | "g" => act(Action::ToggleGroup { group_id: num(a, "group id")? }),
        "compact" => act(Action::ToggleCompact { step_id: step(a)? }),
        "unroll" | "u" => act(Action::Unroll { step_id: step(a)? }),
        "next" | "n" | "prev" | "p" => {
            let n: i64 = if a.is_some() { num(a, "count")? } else { 1 };
            let delta = if head.starts_with('n') { n } else { -n };
            act(Action::MoveCursor(CursorTarget::Delta { delta }))
        }
        "tick" | "t" => {
            let fraction = if b.is_some() { num(b, "fraction")? } else { 0.0 };
            act(Action::MoveCursor(CursorTarget::Tick { tick: num(a, "tick")?, fraction }))
        }
        "end" => act(Action::MoveCursor(CursorTarget::StepEnd { step_end: step(a)? })),
        "select" | "s" => act(Action::SelectSource { start_offset: num(a, "start")?, end_offset: num(b, "end")? }),
        "view" | "v" => Ok(Some(Command::View)),
        "data" | "d" => Ok(Some(Command::Data)),
        "log" => Ok(Some(Command::Log)),
        "help" | "?" => Ok(Some(Command::Help)),
        "quit" | "exit" | "q" => Ok(Some(Command::Quit)),
        other => Err(format!("unknown command {other}; try help")),
    }
}
