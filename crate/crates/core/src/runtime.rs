//! Machine state, energy accounting and errors shared by the interpreter and
//! the term evaluator. Both engines charge energy exclusively through
//! [`Ledger`], so their traces are directly comparable.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde_json::json;
use thiserror::Error;

use crate::hw::{ComponentStates, ModelSet, PhiError, StepError, StepOutcome};
use crate::quantity::{Duration, Energy, Power};
use crate::syntax::{FunDef, Type};
use crate::timing::Construct;
use crate::value::{BinOpError, Value};

/// Default bound on call depth; `main` counts as depth 1.
pub const DEFAULT_RECURSION_LIMIT: usize = 10_000;

/// Environment variable that overrides [`DEFAULT_RECURSION_LIMIT`].
pub const RECURSION_LIMIT_VAR: &str = "ECA_RECURSION_LIMIT";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("program has no `main` function")]
    MissingMain,
    #[error("missing input `{0}` for `main`")]
    MissingInput(String),
    #[error("`main` has no parameter `{0}`")]
    UnknownInput(String),
    #[error("input `{name}` must be {expected}, got {found}")]
    InputType { name: String, expected: Type, found: Type },
    #[error("input `{name}`: `{text}` is not a valid {expected}")]
    InputSyntax { name: String, expected: Type, text: String },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("no field `{field}` in {value}")]
    NoField { field: String, value: String },
    #[error("expected a {expected} value, got {found}")]
    ValueType { expected: Type, found: Type },
    #[error(transparent)]
    BinOp(#[from] BinOpError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Phi(#[from] PhiError),
    #[error("repeat count {count} is negative")]
    NegativeRepeat { count: BigInt },
    #[error("repeat count {count} is too large")]
    RepeatOverflow { count: BigInt },
    #[error("recursion limit of {limit} exceeded when calling `{function}`")]
    RecursionLimit { function: String, limit: usize },
    #[error("{expected} term expected, found `{found}`")]
    MalformedTerm { expected: &'static str, found: String },
}

impl RuntimeError {
    /// Variant name, stable across releases; scenario files match on it.
    pub fn kind(&self) -> &'static str {
        match self {
            RuntimeError::MissingMain => "MissingMain",
            RuntimeError::MissingInput(_) => "MissingInput",
            RuntimeError::UnknownInput(_) => "UnknownInput",
            RuntimeError::InputType { .. } => "InputType",
            RuntimeError::InputSyntax { .. } => "InputSyntax",
            RuntimeError::UnboundVariable(_) => "UnboundVariable",
            RuntimeError::UnknownFunction(_) => "UnknownFunction",
            RuntimeError::UnknownComponent(_) => "UnknownComponent",
            RuntimeError::NoField { .. } => "NoField",
            RuntimeError::ValueType { .. } => "ValueType",
            RuntimeError::BinOp(_) => "BinOp",
            RuntimeError::Step(_) => "StepError",
            RuntimeError::Phi(_) => "PhiError",
            RuntimeError::NegativeRepeat { .. } => "NegativeRepeat",
            RuntimeError::RepeatOverflow { .. } => "RepeatOverflow",
            RuntimeError::RecursionLimit { .. } => "RecursionLimit",
            RuntimeError::MalformedTerm { .. } => "MalformedTerm",
        }
    }
}

/// Parses textual `main` inputs (`n=3` style values) against `main`'s
/// parameter types. Every parameter must be supplied.
pub fn parse_inputs(main: &FunDef<Type>, raw: &BTreeMap<String, String>) -> Result<BTreeMap<String, Value>, RuntimeError> {
    if let Some((missing, _)) = main.params.iter().find(|(p, _)| !raw.contains_key(p)) {
        return Err(RuntimeError::MissingInput(missing.clone()));
    }
    raw.iter()
        .map(|(name, text)| {
            let (_, ty) = main.params.iter().find(|(p, _)| p == name).ok_or_else(|| RuntimeError::UnknownInput(name.clone()))?;
            let v = Value::parse_as(text, ty).ok_or_else(|| RuntimeError::InputSyntax {
                name: name.clone(),
                expected: ty.clone(),
                text: text.clone(),
            })?;
            Ok((name.clone(), v))
        })
        .collect()
}

/// Local program state σ: a stack of scopes, innermost last.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LocalState {
    frames: Vec<BTreeMap<String, Value>>,
}

impl LocalState {
    pub fn new() -> LocalState {
        LocalState::default()
    }

    /// A state with a single scope holding `bindings`.
    pub fn with_frame(bindings: impl IntoIterator<Item = (String, Value)>) -> LocalState {
        LocalState { frames: vec![bindings.into_iter().collect()] }
    }

    pub fn frames(&self) -> &[BTreeMap<String, Value>] {
        &self.frames
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }

    pub fn push(&mut self) {
        self.frames.push(BTreeMap::new());
    }

    pub fn pop(&mut self) {
        self.frames.pop();
    }

    /// Binds `name` in the innermost scope.
    pub fn declare(&mut self, name: &str, value: Value) {
        if self.frames.is_empty() {
            self.push();
        }
        self.frames.last_mut().expect("at least one frame").insert(name.to_string(), value);
    }

    /// Overwrites the innermost binding of `name`; hands the value back when
    /// no local binding exists.
    pub fn assign(&mut self, name: &str, value: Value) -> Result<(), Value> {
        match self.frames.iter_mut().rev().find_map(|f| f.get_mut(name)) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(value),
        }
    }

    /// Visible bindings, inner scopes shadowing outer ones.
    pub fn visible(&self) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        for f in &self.frames {
            out.extend(f.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        out
    }
}

/// Global program state G.
pub type GlobalState = BTreeMap<String, Value>;

/// Global variables paired with component states.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GState {
    pub globals: GlobalState,
    pub components: ComponentStates,
}

/// The full machine state (σ, G, Γ).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MachineState {
    pub locals: LocalState,
    pub global: GState,
}

impl MachineState {
    pub fn lookup(&self, name: &str) -> Result<&Value, RuntimeError> {
        self.locals
            .lookup(name)
            .or_else(|| self.global.globals.get(name))
            .ok_or_else(|| RuntimeError::UnboundVariable(name.to_string()))
    }

    /// Writes the local binding of `name` if there is one, else the global.
    pub fn assign(&mut self, name: &str, value: Value) -> Result<(), RuntimeError> {
        let Err(value) = self.locals.assign(name, value) else { return Ok(()) };
        match self.global.globals.get_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(RuntimeError::UnboundVariable(name.to_string())),
        }
    }
}

/// What a time-draw charge was for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChargeLabel {
    Construct(Construct),
    Component { component: String, function: String },
}

impl std::fmt::Display for ChargeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChargeLabel::Construct(c) => write!(f, "{c}"),
            ChargeLabel::Component { component, function } => write!(f, "{component}::{function}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Transition { component: String, function: String, from: String, to: String, energy: Energy },
    TimeDraw { label: ChargeLabel, duration: Duration, power: Power, energy: Energy },
}

impl TraceEvent {
    pub fn energy(&self) -> &Energy {
        match self {
            TraceEvent::Transition { energy, .. } | TraceEvent::TimeDraw { energy, .. } => energy,
        }
    }

    /// One JSON object per event; quantities are exact `n/d` strings.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            TraceEvent::Transition { component, function, from, to, energy } => json!({
                "kind": "transition",
                "component": component,
                "function": function,
                "from": from,
                "to": to,
                "energy": energy.to_ratio_string(),
            }),
            TraceEvent::TimeDraw { label, duration, power, energy } => json!({
                "kind": "time-draw",
                "component": match label {
                    ChargeLabel::Component { component, .. } => Some(component),
                    ChargeLabel::Construct(_) => None,
                },
                "construct": label.to_string(),
                "duration": duration.to_ratio_string(),
                "power": power.to_ratio_string(),
                "energy": energy.to_ratio_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ComponentEnergy {
    pub transition: Energy,
    pub time_draw: Energy,
}

impl ComponentEnergy {
    pub fn total(&self) -> Energy {
        &self.transition + &self.time_draw
    }
}

/// Energy split by cause. Time draw is attributed to each component in
/// proportion to its own power draw at charge time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnergyBreakdown {
    pub transition: Energy,
    pub time_draw: Energy,
    pub per_component: BTreeMap<String, ComponentEnergy>,
}

impl EnergyBreakdown {
    pub fn total(&self) -> Energy {
        &self.transition + &self.time_draw
    }
}

/// Accumulates energy charges and, optionally, the trace that explains them.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    pub breakdown: EnergyBreakdown,
    trace: Option<Vec<TraceEvent>>,
}

impl Ledger {
    pub fn new(models: &ModelSet, record_trace: bool) -> Ledger {
        let per_component = models.iter().map(|m| (m.name.clone(), ComponentEnergy::default())).collect();
        Ledger {
            breakdown: EnergyBreakdown { per_component, ..EnergyBreakdown::default() },
            trace: record_trace.then(Vec::new),
        }
    }

    pub fn total(&self) -> Energy {
        self.breakdown.total()
    }

    /// Charges Φ(gamma)·duration.
    pub fn charge_time(
        &mut self,
        label: impl FnOnce() -> ChargeLabel,
        duration: &Duration,
        models: &ModelSet,
        gamma: &ComponentStates,
    ) -> Result<(), RuntimeError> {
        if duration.is_zero() {
            return Ok(());
        }
        let mut phi = Power::zero();
        for (component, power) in models.draws(gamma)? {
            let e = power * duration;
            phi += power;
            let entry = self.breakdown.per_component.entry(component.to_string()).or_default();
            entry.time_draw += &e;
        }
        let energy = &phi * duration;
        self.breakdown.time_draw += &energy;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent::TimeDraw { label: label(), duration: duration.clone(), power: phi, energy });
        }
        Ok(())
    }

    pub fn charge_transition(&mut self, component: &str, function: &str, step: &StepOutcome) {
        self.breakdown.transition += &step.energy;
        self.breakdown.per_component.entry(component.to_string()).or_default().transition += &step.energy;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent::Transition {
                component: component.to_string(),
                function: function.to_string(),
                from: step.from.clone(),
                to: step.to.clone(),
                energy: step.energy.clone(),
            });
        }
    }

    pub fn into_trace(self) -> Vec<TraceEvent> {
        self.trace.unwrap_or_default()
    }
}

/// Everything a completed run produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub value: Value,
    pub locals: LocalState,
    pub globals: GlobalState,
    pub components: ComponentStates,
    pub energy: Energy,
    pub breakdown: EnergyBreakdown,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub recursion_limit: usize,
    pub record_trace: bool,
    /// Reuse value and state results of identical calls (term evaluator only).
    pub memoize: bool,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions { recursion_limit: DEFAULT_RECURSION_LIMIT, record_trace: false, memoize: true }
    }
}

impl RunOptions {
    /// Defaults, with the recursion limit taken from `ECA_RECURSION_LIMIT`
    /// when it holds a positive integer.
    pub fn from_env() -> RunOptions {
        let limit = std::env::var(RECURSION_LIMIT_VAR).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
        RunOptions { recursion_limit: limit.unwrap_or(DEFAULT_RECURSION_LIMIT), ..RunOptions::default() }
    }

    pub fn with_trace(mut self) -> RunOptions {
        self.record_trace = true;
        self
    }
}

/// Orders `inputs` by the parameters of `main` and checks their types.
pub fn bind_inputs(main: &FunDef<Type>, inputs: &BTreeMap<String, Value>) -> Result<Vec<(String, Value)>, RuntimeError> {
    if let Some(extra) = inputs.keys().find(|k| !main.params.iter().any(|(p, _)| p == *k)) {
        return Err(RuntimeError::UnknownInput(extra.clone()));
    }
    main.params
        .iter()
        .map(|(name, ty)| {
            let v = inputs.get(name).ok_or_else(|| RuntimeError::MissingInput(name.clone()))?;
            if v.ty() != *ty {
                return Err(RuntimeError::InputType { name: name.clone(), expected: ty.clone(), found: v.ty() });
            }
            Ok((name.clone(), v.clone()))
        })
        .collect()
}

/// Runs `f` on a thread whose stack is sized for `recursion_limit` nested
/// calls.
pub(crate) fn on_big_stack<T: Send>(recursion_limit: usize, f: impl FnOnce() -> T + Send) -> T {
    const PER_LEVEL: usize = 128 * 1024;
    const MIN: usize = 32 << 20;
    const MAX: usize = 16 << 30;
    let size = recursion_limit.saturating_mul(PER_LEVEL).clamp(MIN, MAX);
    std::thread::scope(|scope| {
        let handle = std::thread::Builder::new()
            .name("eca-eval".into())
            .stack_size(size)
            .spawn_scoped(scope, f)
            .expect("failed to spawn evaluation thread");
        handle.join().unwrap_or_else(|panic| std::panic::resume_unwind(panic))
    })
}
