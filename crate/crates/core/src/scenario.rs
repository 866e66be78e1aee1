//! Loading programs, hardware models and timing tables from disk, running
//! them through one or both engines, and cross-checking the results.
//!
//! A corpus is a directory of `*.eca` programs. A program `foo.eca` is
//! exercised by the scenarios in its sidecar `foo.scenarios.toml`:
//!
//! ```toml
//! [[scenario]]
//! name = "three-steps"
//! program = "other.eca"              # optional; defaults to foo.eca
//! models = ["../models/dev4.toml"]   # relative to the sidecar
//! timing = "../timings/unit.toml"    # optional; all-zero when absent
//! inputs = { n = 3, fast = true }
//! expect_energy = "16"               # optional, exact rational
//! expect_error = "NegativeRepeat"    # optional, a RuntimeError kind
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::hw::{load_model, ModelError, ModelSet};
use crate::interp::run_with;
use crate::quantity::{parse_rational, Energy};
use crate::runtime::{parse_inputs, RunOptions, RunResult, RuntimeError, TraceEvent};
use crate::syntax::{parse_source, SyntaxError};
use crate::timing::{TimingError, TimingTable};
use crate::transform::{evaluate_program, transform_program, Analysis, TransformError};
use crate::types::{check, TypeError, TypedProgram};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    Interp,
    Transform,
    #[default]
    Both,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Engine, String> {
        match s {
            "interp" => Ok(Engine::Interp),
            "transform" => Ok(Engine::Transform),
            "both" => Ok(Engine::Both),
            other => Err(format!("unknown engine `{other}` (expected interp, transform or both)")),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Interp => "interp",
            Engine::Transform => "transform",
            Engine::Both => "both",
        })
    }
}

/// Anything that can go wrong before a program runs.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{error}")]
    Syntax { path: PathBuf, error: SyntaxError },
    #[error("{path}: {} type error(s)", errors.len())]
    Type { path: PathBuf, errors: Vec<TypeError> },
    #[error("{path}: {}", join(errors))]
    Model { path: PathBuf, errors: Vec<ModelError> },
    #[error("{path}: {}", join(errors))]
    Timing { path: PathBuf, errors: Vec<TimingError> },
    #[error("component `{0}` is defined by more than one model file")]
    DuplicateComponent(String),
    #[error("{path}: {message}")]
    Scenario { path: PathBuf, message: String },
    #[error("{path}: {error}")]
    Transform { path: PathBuf, error: TransformError },
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join("; ")
}

impl LoadError {
    /// One line per diagnostic, each prefixed with `path:line:col` where a
    /// location is known.
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            LoadError::Type { path, errors } => errors.iter().map(|e| format!("{}:{e}", path.display())).collect(),
            LoadError::Model { path, errors } => errors.iter().map(|e| format!("{}:{e}", path.display())).collect(),
            LoadError::Timing { path, errors } => errors.iter().map(|e| format!("{}:{e}", path.display())).collect(),
            other => vec![other.to_string()],
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|e| LoadError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Hardware models and timing table a program is evaluated against.
#[derive(Debug, Clone)]
pub struct Environment {
    pub models: ModelSet,
    pub timing: TimingTable,
}

pub fn load_models(paths: &[PathBuf]) -> Result<ModelSet, LoadError> {
    let mut models = Vec::new();
    for path in paths {
        let text = read_file(path)?;
        models.push(load_model(&text).map_err(|errors| LoadError::Model { path: path.clone(), errors })?);
    }
    ModelSet::new(models).map_err(|d| LoadError::DuplicateComponent(d.0))
}

pub fn load_timing(path: Option<&Path>) -> Result<TimingTable, LoadError> {
    match path {
        None => Ok(TimingTable::zero()),
        Some(path) => {
            TimingTable::parse(&read_file(path)?).map_err(|errors| LoadError::Timing { path: path.to_path_buf(), errors })
        }
    }
}

pub fn load_environment(models: &[PathBuf], timing: Option<&Path>) -> Result<Environment, LoadError> {
    Ok(Environment { models: load_models(models)?, timing: load_timing(timing)? })
}

/// Parses and type-checks the program at `path` against `models`'
/// component signatures.
pub fn load_program(path: &Path, models: &ModelSet) -> Result<TypedProgram, LoadError> {
    let source = read_file(path)?;
    check_source(path, &source, models)
}

pub fn check_source(path: &Path, source: &str, models: &ModelSet) -> Result<TypedProgram, LoadError> {
    let program = parse_source(source).map_err(|error| LoadError::Syntax { path: path.to_path_buf(), error })?;
    check(&program, &models.signatures()).map_err(|errors| LoadError::Type { path: path.to_path_buf(), errors })
}

/// One (models, timing, inputs) configuration of a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSpec {
    pub name: String,
    /// Program to run; corpus sidecars leave this unset and apply to their
    /// own program.
    pub program: Option<PathBuf>,
    pub models: Vec<PathBuf>,
    pub timing: Option<PathBuf>,
    pub inputs: BTreeMap<String, String>,
    pub expect_energy: Option<Energy>,
    pub expect_error: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSidecar {
    #[serde(default)]
    scenario: Vec<RawScenario>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    program: Option<PathBuf>,
    models: Vec<PathBuf>,
    timing: Option<PathBuf>,
    #[serde(default)]
    inputs: BTreeMap<String, toml::Value>,
    expect_energy: Option<String>,
    expect_error: Option<String>,
}

fn input_text(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(n) => Some(n.to_string()),
        toml::Value::Float(x) => Some(x.to_string()),
        toml::Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Reads a sidecar file; relative paths inside it are resolved against the
/// sidecar's directory.
pub fn load_sidecar(path: &Path) -> Result<Vec<ScenarioSpec>, LoadError> {
    let text = read_file(path)?;
    let bad = |message: String| LoadError::Scenario { path: path.to_path_buf(), message };
    let raw: RawSidecar = toml::from_str(&text).map_err(|e| bad(e.message().to_string()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    raw.scenario
        .into_iter()
        .map(|s| {
            let inputs = s
                .inputs
                .iter()
                .map(|(k, v)| input_text(v).map(|t| (k.clone(), t)).ok_or_else(|| bad(format!("input `{k}` is not a scalar"))))
                .collect::<Result<_, _>>()?;
            let expect_energy = s
                .expect_energy
                .map(|e| parse_rational(&e).map(Energy::new).map_err(|err| bad(format!("expect_energy: {err}"))))
                .transpose()?;
            Ok(ScenarioSpec {
                name: s.name,
                program: s.program.map(|p| base.join(p)),
                models: s.models.iter().map(|m| base.join(m)).collect(),
                timing: s.timing.map(|t| base.join(t)),
                inputs,
                expect_energy,
                expect_error: s.expect_error,
            })
        })
        .collect()
}

/// Where the two engines' runs first disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    /// `outcome`, `value`, `energy`, `globals`, `components`, `breakdown` or
    /// `trace`.
    pub field: &'static str,
    pub interp: String,
    pub transform: String,
    /// Number of leading trace events on which both runs agree.
    pub trace_prefix: usize,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} differs after {} matching trace events: interp {} / transform {}",
            self.field, self.trace_prefix, self.interp, self.transform
        )
    }
}

fn common_prefix(a: &[TraceEvent], b: &[TraceEvent]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Compares two runs field by field; `None` when they agree completely.
pub fn compare_runs(interp: &Result<RunResult, RuntimeError>, transform: &Result<RunResult, RuntimeError>) -> Option<Divergence> {
    let (a, b) = match (interp, transform) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(a), Err(b)) if a == b => return None,
        _ => {
            let show = |r: &Result<RunResult, RuntimeError>| match r {
                Ok(r) => format!("ok ({} J)", r.energy.to_ratio_string()),
                Err(e) => format!("error: {e}"),
            };
            return Some(Divergence { field: "outcome", interp: show(interp), transform: show(transform), trace_prefix: 0 });
        }
    };
    let trace_prefix = common_prefix(&a.trace, &b.trace);
    let diverge = |field, x: String, y: String| Some(Divergence { field, interp: x, transform: y, trace_prefix });
    if a.value != b.value {
        return diverge("value", a.value.to_string(), b.value.to_string());
    }
    if a.energy != b.energy {
        return diverge("energy", a.energy.to_ratio_string(), b.energy.to_ratio_string());
    }
    if a.globals != b.globals {
        return diverge("globals", format!("{:?}", a.globals), format!("{:?}", b.globals));
    }
    if a.components != b.components {
        return diverge("components", format!("{:?}", a.components), format!("{:?}", b.components));
    }
    if a.breakdown != b.breakdown {
        return diverge("breakdown", format!("{:?}", a.breakdown), format!("{:?}", b.breakdown));
    }
    if a.trace != b.trace {
        let at = |t: &[TraceEvent]| t.get(trace_prefix).map_or("end of trace".to_string(), |e| e.to_json().to_string());
        return diverge("trace", at(&a.trace), at(&b.trace));
    }
    None
}

/// Results of running one scenario on the selected engines.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub interp: Option<Result<RunResult, RuntimeError>>,
    pub transform: Option<Result<RunResult, RuntimeError>>,
}

impl Outcome {
    /// The interpreter's result when it ran, else the transformation's.
    pub fn primary(&self) -> &Result<RunResult, RuntimeError> {
        self.interp.as_ref().or(self.transform.as_ref()).expect("at least one engine ran")
    }

    pub fn divergence(&self) -> Option<Divergence> {
        match (&self.interp, &self.transform) {
            (Some(a), Some(b)) => compare_runs(a, b),
            _ => None,
        }
    }
}

/// A type-checked program together with its (engine-independent) analysis.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub program: TypedProgram,
    pub analysis: Analysis,
}

impl Prepared {
    pub fn new(path: &Path, program: TypedProgram) -> Result<Prepared, LoadError> {
        let analysis = transform_program(&program).map_err(|error| LoadError::Transform { path: path.to_path_buf(), error })?;
        Ok(Prepared { program, analysis })
    }

    pub fn main_inputs(&self, raw: &BTreeMap<String, String>) -> Result<BTreeMap<String, Value>, RuntimeError> {
        let main = self.program.function("main").ok_or(RuntimeError::MissingMain)?;
        parse_inputs(main, raw)
    }

    pub fn run(&self, env: &Environment, inputs: &BTreeMap<String, Value>, engine: Engine, options: &RunOptions) -> Outcome {
        let interp = matches!(engine, Engine::Interp | Engine::Both)
            .then(|| run_with(&self.program, &env.models, &env.timing, inputs, options));
        let transform = matches!(engine, Engine::Transform | Engine::Both).then(|| {
            evaluate_program(&self.analysis, &env.models, &env.timing, &self.program, inputs, options)
        });
        Outcome { interp, transform }
    }
}

/// A corpus program and its scenarios.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub program: PathBuf,
    pub sidecar: Option<PathBuf>,
}

impl CorpusEntry {
    pub fn scenarios(&self) -> Result<Vec<ScenarioSpec>, LoadError> {
        self.sidecar.as_deref().map_or(Ok(Vec::new()), load_sidecar)
    }
}

/// Lists the `*.eca` files directly inside `dir`, sorted by name.
pub fn discover(dir: &Path) -> Result<Vec<CorpusEntry>, LoadError> {
    let io = |e: std::io::Error| LoadError::Io { path: dir.to_path_buf(), message: e.to_string() };
    let mut entries = Vec::new();
    for item in std::fs::read_dir(dir).map_err(io)? {
        let path = item.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "eca") {
            let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let sidecar = path.with_file_name(format!("{name}.scenarios.toml"));
            entries.push(CorpusEntry { name, sidecar: sidecar.exists().then_some(sidecar), program: path });
        }
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Diverged(Divergence),
    /// Both engines agree but contradict the sidecar's expectation.
    Unexpected { expected: String, actual: String },
    Load(String),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Diverged(d) => write!(f, "DIVERGENT: {d}"),
            Verdict::Unexpected { expected, actual } => write!(f, "expected {expected}, got {actual}"),
            Verdict::Load(e) => write!(f, "load error: {e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelftestRow {
    pub program: String,
    pub scenario: String,
    pub verdict: Verdict,
    pub energy: Option<Energy>,
}

fn expectation(spec: &ScenarioSpec, result: &Result<RunResult, RuntimeError>) -> Verdict {
    let actual = match result {
        Ok(r) => format!("{} J", r.energy.to_ratio_string()),
        Err(e) => format!("{} ({e})", e.kind()),
    };
    let ok = match (result, &spec.expect_error, &spec.expect_energy) {
        (Err(e), Some(kind), _) => e.kind() == kind,
        (Err(_), None, _) => false,
        (Ok(_), Some(_), _) => false,
        (Ok(r), None, Some(energy)) => r.energy == *energy,
        (Ok(_), None, None) => true,
    };
    if ok {
        return Verdict::Pass;
    }
    let expected = match (&spec.expect_error, &spec.expect_energy) {
        (Some(kind), _) => kind.clone(),
        (None, Some(e)) => format!("{} J", e.to_ratio_string()),
        (None, None) => "success".to_string(),
    };
    Verdict::Unexpected { expected, actual }
}

/// Runs every scenario of `entry` on both engines.
pub fn check_entry(entry: &CorpusEntry, options: &RunOptions) -> Vec<SelftestRow> {
    let row = |scenario: &str, verdict, energy| SelftestRow {
        program: entry.name.clone(),
        scenario: scenario.to_string(),
        verdict,
        energy,
    };
    let specs = match entry.scenarios() {
        Ok(specs) => specs,
        Err(e) => return vec![row("*", Verdict::Load(e.to_string()), None)],
    };
    let source = match read_file(&entry.program) {
        Ok(s) => s,
        Err(e) => return vec![row("*", Verdict::Load(e.to_string()), None)],
    };
    specs
        .iter()
        .map(|spec| {
            let prepared = load_environment(&spec.models, spec.timing.as_deref()).and_then(|env| {
                let typed = check_source(&entry.program, &source, &env.models)?;
                Ok((env, Prepared::new(&entry.program, typed)?))
            });
            let (env, prepared) = match prepared {
                Ok(p) => p,
                Err(e) => return row(&spec.name, Verdict::Load(e.to_string()), None),
            };
            let inputs = match prepared.main_inputs(&spec.inputs) {
                Ok(i) => i,
                Err(e) => return row(&spec.name, Verdict::Load(e.to_string()), None),
            };
            let outcome = prepared.run(&env, &inputs, Engine::Both, options);
            let energy = outcome.primary().as_ref().ok().map(|r| r.energy.clone());
            let verdict = match outcome.divergence() {
                Some(d) => Verdict::Diverged(d),
                None => expectation(spec, outcome.primary()),
            };
            row(&spec.name, verdict, energy)
        })
        .collect()
}
