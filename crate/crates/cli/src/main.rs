use std::io::{BufRead, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use crosstrace_cli::repl::{parse_command, Command, HELP};
use crosstrace_cli::server::{serve, AppState, DEFAULT_PATH_AGE};
use crosstrace_cli::{text, ApiError, Registry};
use crosstrace_core::abstraction::{Policy, ViewState};
use crosstrace_core::dataview::data_panel;
use crosstrace_core::interpreter::{execute, ExecConfig, DEFAULT_MAX_OPS};
use crosstrace_core::syntax::ast_to_json;
use crosstrace_core::trace::{outline, outline_to_json, trace_to_json, SnapshotMode};
use crosstrace_core::{parse, Program, Trace};
use serde_json::json;

const EXIT_PARSE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "crosstrace", version, about = "Trace a JavaScript subset and explore its execution at any level of detail")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "pretty")]
    format: Format,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Pretty,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Source file, or `-` for standard input.
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_OPS)]
    max_ops: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check syntax, optionally printing the syntax tree.
    Parse {
        file: PathBuf,
        #[arg(long)]
        ast: bool,
    },
    /// Execute and print the full trace.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        /// Attach the memory before and after every step.
        #[arg(long)]
        snapshots: bool,
    },
    /// Print the step tree down to a depth with read and write summaries.
    Outline {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Explore a trace interactively with view actions read from standard input.
    Navigate {
        #[command(flatten)]
        run: RunArgs,
        /// Show every step instead of abbreviating with dots.
        #[arg(long)]
        no_disclosure: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory of static files served next to the API.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn read_source(path: &PathBuf) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn report(format: Format, e: &ApiError) {
    match format {
        Format::Json => println!("{}", e.to_json()),
        Format::Pretty => eprintln!("error: {e}"),
    }
}

fn print_json(format: Format, v: &serde_json::Value) {
    let text = match format {
        Format::Json => serde_json::to_string(v),
        Format::Pretty => serde_json::to_string_pretty(v),
    };
    println!("{}", text.expect("serializable"));
}

fn load(format: Format, path: &PathBuf) -> Result<(String, Program), ExitCode> {
    let src = read_source(path).map_err(|e| {
        report(format, &ApiError::bad_request("Io", e));
        ExitCode::from(EXIT_PARSE)
    })?;
    match parse(&src) {
        Ok(p) => Ok((src, p)),
        Err(e) => {
            report(format, &ApiError::from(e));
            Err(ExitCode::from(EXIT_PARSE))
        }
    }
}

/// The trace and the exit code its outcome calls for.
fn run(format: Format, args: &RunArgs) -> Result<(Trace, ExitCode), ExitCode> {
    let (_, program) = load(format, &args.file)?;
    let cfg = ExecConfig { seed: args.seed, max_ops: args.max_ops, ..ExecConfig::default() };
    Ok(match execute(&program, &cfg) {
        Ok(t) => (t, ExitCode::SUCCESS),
        Err(a) => {
            if format == Format::Pretty {
                report(format, &ApiError::from(a.error.clone()));
            }
            (a.trace, ExitCode::from(EXIT_RUNTIME))
        }
    })
}

fn navigate(format: Format, trace: Trace, policy: Policy) {
    let trace = Arc::new(trace);
    let mut view = ViewState::initial(trace.clone(), policy);
    let show = |view: &ViewState| match format {
        Format::Json => println!("{}", view.to_json()),
        Format::Pretty => print!("{}", text::render_view(view)),
    };
    show(&view);
    let stdin = std::io::stdin();
    let prompt = || {
        if format == Format::Pretty {
            print!("> ");
            let _ = std::io::stdout().flush();
        }
    };
    prompt();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        match parse_command(&line) {
            Ok(None) => {}
            Ok(Some(Command::Quit)) => break,
            Ok(Some(Command::Help)) => println!("{HELP}"),
            Ok(Some(Command::View)) => show(&view),
            Ok(Some(Command::Log)) => println!("{}", json!(view.log())),
            Ok(Some(Command::Data)) => {
                let panel = data_panel(&view, DEFAULT_PATH_AGE);
                match format {
                    Format::Json => println!("{}", json!(panel)),
                    Format::Pretty => print!("{}", text::render_data(&trace, &panel)),
                }
            }
            Ok(Some(Command::Act(action))) => match view.apply(&action) {
                Ok(_) => show(&view),
                Err(e) => report(format, &ApiError::from(e)),
            },
            Err(e) => report(format, &ApiError::bad_request("InvalidAction", e)),
        }
        prompt();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let outcome = match cli.command {
        Cmd::Parse { file, ast } => load(format, &file).map(|(_, p)| {
            match (ast, format) {
                (true, Format::Pretty) => print!("{}", text::render_ast(&p)),
                (true, Format::Json) => print_json(format, &ast_to_json(&p)),
                (false, Format::Json) => println!("{}", json!({ "ok": true, "nodes": p.len() })),
                (false, Format::Pretty) => println!("ok: {} nodes", p.len()),
            }
            ExitCode::SUCCESS
        }),
        Cmd::Trace { run: args, snapshots } => run(format, &args).map(|(t, code)| {
            let mode = if snapshots { SnapshotMode::Full } else { SnapshotMode::None };
            print_json(format, &trace_to_json(&t, mode));
            code
        }),
        Cmd::Outline { run: args, depth } => run(format, &args).map(|(t, code)| {
            match format {
                Format::Json => print_json(format, &outline_to_json(&t, depth)),
                Format::Pretty => print!("{}", outline(&t, depth)),
            }
            code
        }),
        Cmd::Navigate { run: args, no_disclosure } => run(format, &args).map(|(t, _)| {
            navigate(format, t, Policy { disclosure: !no_disclosure });
            ExitCode::SUCCESS
        }),
        Cmd::Serve { port, host, static_dir } => {
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            let state = AppState::new(Registry::from_env());
            match rt.block_on(serve(SocketAddr::new(host, port), state, static_dir)) {
                Ok(()) => Ok(ExitCode::SUCCESS),
                Err(e) => {
                    eprintln!("serve: {e}");
                    Ok(ExitCode::FAILURE)
                }
            }
        }
    };
    outcome.unwrap_or_else(|code| code)
}
