//! `eca`: parse, type-check and energy-analyze ECA programs.
//!
//! Exit codes: 0 success, 1 syntax or type errors, 2 unreadable files,
//! invalid models or scenarios, 3 engine divergence or self-test failure,
//! 4 runtime errors.

mod report;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eca_core::runtime::RunOptions;
use eca_core::scenario::{
    check_entry, discover, load_environment, load_sidecar, read_file, Engine, Environment, LoadError, Prepared, ScenarioSpec,
};
use eca_core::syntax::{parse_source, program_to_json};
use report::{AnalysisReport, Comparison, Row, Status};
use serde_json::json;
use sha2::{Digest, Sha256};

const OK: u8 = 0;
const SOURCE_ERROR: u8 = 1;
const INPUT_ERROR: u8 = 2;
const DIVERGENCE: u8 = 3;
const RUNTIME_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "eca", version, about = "Exact energy analysis of ECA programs against hardware component models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and report syntax errors.
    Parse {
        path: PathBuf,
        /// Print the syntax tree as JSON.
        #[arg(long)]
        emit_ast: bool,
    },
    /// Type-check a program against the signatures of the given models.
    Check {
        path: PathBuf,
        #[arg(long = "model", value_name = "PATH")]
        models: Vec<PathBuf>,
    },
    /// Run a program on one scenario and report its energy consumption.
    Analyze(AnalyzeArgs),
    /// Rank several scenarios by total energy.
    Compare {
        /// Scenario files (`[[scenario]]` tables).
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Program for scenarios that do not name one.
        #[arg(long, value_name = "PATH")]
        program: Option<PathBuf>,
        #[arg(long, default_value = "both", value_parser = parse_engine)]
        engine: Engine,
        #[arg(long)]
        json: bool,
    },
    /// Cross-check both engines on every program of a corpus directory.
    Selftest {
        #[arg(default_value = "corpus/programs")]
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    path: PathBuf,
    #[arg(long = "model", value_name = "PATH")]
    models: Vec<PathBuf>,
    #[arg(long, value_name = "PATH")]
    timing: Option<PathBuf>,
    /// Value for a parameter of `main`, as NAME=VALUE.
    #[arg(long = "input", value_name = "NAME=VALUE")]
    inputs: Vec<String>,
    #[arg(long, default_value = "both", value_parser = parse_engine)]
    engine: Engine,
    #[arg(long)]
    json: bool,
    /// Print every function's V, Σ and E terms.
    #[arg(long)]
    emit_term: bool,
    /// Write the energy trace as JSON lines.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Parse { path, emit_ast } => cmd_parse(&path, emit_ast),
        Command::Check { path, models } => cmd_check(&path, &models),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Compare { files, program, engine, json } => cmd_compare(&files, program.as_deref(), engine, json),
        Command::Selftest { dir, json } => cmd_selftest(&dir, json),
    };
    ExitCode::from(code)
}

fn report_load_error(e: &LoadError) -> u8 {
    for line in e.diagnostics() {
        eprintln!("{line}");
    }
    match e {
        LoadError::Syntax { .. } | LoadError::Type { .. } | LoadError::Transform { .. } => SOURCE_ERROR,
        _ => INPUT_ERROR,
    }
}

fn cmd_parse(path: &Path, emit_ast: bool) -> u8 {
    let source = match read_file(path) {
        Ok(s) => s,
        Err(e) => return report_load_error(&e),
    };
    match parse_source(&source) {
        Ok(program) => {
            if emit_ast {
                println!("{}", serde_json::to_string_pretty(&program_to_json(&program)).expect("JSON"));
            }
            OK
        }
        Err(error) => report_load_error(&LoadError::Syntax { path: path.to_path_buf(), error }),
    }
}

fn cmd_check(path: &Path, models: &[PathBuf]) -> u8 {
    let env = match load_environment(models, None) {
        Ok(env) => env,
        Err(e) => return report_load_error(&e),
    };
    match eca_core::scenario::load_program(path, &env.models) {
        Ok(p) => {
            println!("{}: ok ({} functions, {} globals)", path.display(), p.functions.len(), p.globals.len());
            OK
        }
        Err(e) => report_load_error(&e),
    }
}

fn parse_input_flags(flags: &[String]) -> Result<BTreeMap<String, String>, String> {
    flags
        .iter()
        .map(|f| match f.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(format!("--input `{f}`: expected NAME=VALUE")),
        })
        .collect()
}

fn digest(path: &Path) -> Option<String> {
    std::fs::read(path).ok().map(|bytes| Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn options(trace: bool) -> RunOptions {
    let options = RunOptions::from_env();
    if trace {
        options.with_trace()
    } else {
        options
    }
}

fn prepare(path: &Path, models: &[PathBuf], timing: Option<&Path>) -> Result<(Environment, Prepared), LoadError> {
    let env = load_environment(models, timing)?;
    let program = eca_core::scenario::load_program(path, &env.models)?;
    Ok((env, Prepared::new(path, program)?))
}

fn cmd_analyze(args: &AnalyzeArgs) -> u8 {
    let (env, prepared) = match prepare(&args.path, &args.models, args.timing.as_deref()) {
        Ok(p) => p,
        Err(e) => return report_load_error(&e),
    };
    let raw = match parse_input_flags(&args.inputs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return INPUT_ERROR;
        }
    };
    let inputs = match prepared.main_inputs(&raw) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("{}: {e}", args.path.display());
            return INPUT_ERROR;
        }
    };
    if args.emit_term && !args.json {
        print!("{}", prepared.analysis.render_terms());
    }
    let outcome = prepared.run(&env, &inputs, args.engine, &options(args.trace.is_some()));
    if let (Some(path), Ok(result)) = (&args.trace, outcome.primary()) {
        if let Err(e) = write_trace(path, &result.trace) {
            eprintln!("{}: {e}", path.display());
            return INPUT_ERROR;
        }
    }
    let status = Status::from_outcome(&outcome);
    let code = match &status {
        Status::Ok { .. } => OK,
        Status::Divergent(_) => DIVERGENCE,
        Status::RuntimeError(_) | Status::Failed(_) => RUNTIME_ERROR,
    };
    let mut analysis = prepared.analysis.metadata();
    analysis["model_digests"] = args.models.iter().map(|m| (m.display().to_string(), json!(digest(m)))).collect();
    analysis["timing_digest"] = json!(args.timing.as_deref().and_then(digest));
    if args.emit_term {
        analysis["terms"] = json!(prepared.analysis.render_terms());
    }
    let report = AnalysisReport {
        program: args.path.display().to_string(),
        engine: args.engine,
        row: Row {
            name: "cli".into(),
            models: args.models.iter().map(|m| m.display().to_string()).collect(),
            timing: args.timing.as_ref().map(|t| t.display().to_string()),
            inputs: raw,
            status,
        },
        analysis: Some(analysis),
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report.to_json()).expect("JSON"));
    } else {
        print!("{}", report.to_text());
    }
    code
}

fn write_trace(path: &Path, trace: &[eca_core::runtime::TraceEvent]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for event in trace {
        writeln!(out, "{}", event.to_json())?;
    }
    out.flush()
}

fn run_spec(spec: &ScenarioSpec, default_program: Option<&Path>, engine: Engine) -> (String, Row) {
    let program = spec.program.as_deref().or(default_program);
    let mut row = Row {
        name: spec.name.clone(),
        models: spec.models.iter().map(|m| m.display().to_string()).collect(),
        timing: spec.timing.as_ref().map(|t| t.display().to_string()),
        inputs: spec.inputs.clone(),
        status: Status::Failed(String::new()),
    };
    let Some(program) = program else {
        row.status = Status::Failed("scenario names no program and --program is not set".into());
        return (String::new(), row);
    };
    let label = program.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    row.status = match prepare(program, &spec.models, spec.timing.as_deref()) {
        Err(e) => Status::Failed(e.diagnostics().join("; ")),
        Ok((env, prepared)) => match prepared.main_inputs(&spec.inputs) {
            Err(e) => Status::Failed(e.to_string()),
            Ok(inputs) => Status::from_outcome(&prepared.run(&env, &inputs, engine, &RunOptions::from_env())),
        },
    };
    (label, row)
}

fn cmd_compare(files: &[PathBuf], program: Option<&Path>, engine: Engine, json: bool) -> u8 {
    let mut specs = Vec::new();
    for f in files {
        match load_sidecar(f) {
            Ok(s) => specs.extend(s),
            Err(e) => return report_load_error(&e),
        }
    }
    if specs.len() < 2 {
        eprintln!("compare needs at least two scenarios, found {}", specs.len());
        return INPUT_ERROR;
    }
    // scenarios are independent; results are collected in input order
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = specs.iter().map(|spec| scope.spawn(move || run_spec(spec, program, engine))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect::<Vec<_>>()
    });
    let comparison = Comparison { rows };
    if json {
        println!("{}", serde_json::to_string_pretty(&comparison.to_json()).expect("JSON"));
    } else {
        print!("{}", comparison.to_text());
    }
    let statuses = comparison.rows.iter().map(|(_, r)| &r.status);
    if statuses.clone().any(|s| matches!(s, Status::Failed(_) | Status::RuntimeError(_))) {
        RUNTIME_ERROR
    } else if statuses.clone().any(|s| matches!(s, Status::Divergent(_))) {
        DIVERGENCE
    } else {
        OK
    }
}

fn cmd_selftest(dir: &Path, json: bool) -> u8 {
    let entries = match discover(dir) {
        Ok(e) => e,
        Err(e) => return report_load_error(&e),
    };
    if entries.is_empty() {
        eprintln!("{}: no programs found", dir.display());
        return INPUT_ERROR;
    }
    let options = RunOptions::from_env().with_trace();
    let rows: Vec<_> = entries.iter().flat_map(|e| check_entry(e, &options)).collect();
    let failed = rows.iter().filter(|r| !r.verdict.passed()).count();
    if json {
        let out = json!({
            "programs": entries.len(),
            "scenarios": rows.len(),
            "failed": failed,
            "results": rows.iter().map(|r| json!({
                "program": r.program,
                "scenario": r.scenario,
                "pass": r.verdict.passed(),
                "verdict": r.verdict.to_string(),
                "energy": r.energy.as_ref().map(|e| e.to_ratio_string()),
            })).collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("JSON"));
    } else {
        let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
        for entry in &entries {
            let cells = rows
                .iter()
                .filter(|r| r.program == entry.name)
                .map(|r| format!("{}={}", r.scenario, if r.verdict.passed() { "pass" } else { "FAIL" }))
                .collect::<Vec<_>>();
            let cells = if cells.is_empty() { "(no scenarios)".to_string() } else { cells.join("  ") };
            println!("{:<width$}  {cells}", entry.name);
        }
        for r in rows.iter().filter(|r| !r.verdict.passed()) {
            println!("FAIL {}:{}: {}", r.program, r.scenario, r.verdict);
        }
        println!("{} programs, {} scenarios, {} failed", entries.len(), rows.len(), failed);
    }
    if failed == 0 {
        OK
    } else {
        DIVERGENCE
    }
}
