use std::collections::{BTreeMap, HashMap};

use super::build::{Analysis, FunctionJudgment};
use super::term::{Term, TermKind, TimeSymbol};
use crate::hw::{ComponentModel, ModelSet};
use crate::interp::{project, repeat_count};
use crate::quantity::Duration;
use crate::runtime::*;
use crate::syntax::Type;
use crate::timing::TimingTable;
use crate::value::{apply_binop, Value};

#[derive(Debug, Clone)]
enum Memo {
    Value(Value),
    State(MachineState),
}

/// Cached unfolding results, with the call depth each one needed.
type MemoTable = HashMap<(String, TermKind, MachineState), (Memo, usize)>;

/// Evaluates the terms of one [`Analysis`] against a model set and timing
/// table. Energy terms charge the ledger; value and state terms do not.
///
/// Call depth grows by one at each `Subst`/`Rec` unfolding, matching the
/// interpreter's call depth. With memoization on, value and state results of
/// an unfolding are cached per (function, kind, callee state); a cached result
/// is reused only when the call depth it needed still fits under the limit.
pub struct Evaluator<'a> {
    analysis: &'a Analysis,
    models: &'a ModelSet,
    timing: &'a TimingTable,
    limit: usize,
    depth: usize,
    /// Deepest call depth reached so far.
    peak: usize,
    memo: Option<MemoTable>,
    pub ledger: Ledger,
}

impl<'a> Evaluator<'a> {
    pub fn new(analysis: &'a Analysis, models: &'a ModelSet, timing: &'a TimingTable, options: &RunOptions) -> Self {
        Evaluator {
            analysis,
            models,
            timing,
            limit: options.recursion_limit,
            depth: 0,
            peak: 0,
            memo: options.memoize.then(HashMap::new),
            ledger: Ledger::new(models, options.record_trace),
        }
    }

    /// Sets the call depth that subsequent evaluations start from.
    pub fn set_depth(&mut self, depth: usize) {
        self.depth = depth;
        self.peak = self.peak.max(depth);
    }

    fn judgment(&self, f: &str) -> Result<&'a FunctionJudgment, RuntimeError> {
        self.analysis.functions.get(f).ok_or_else(|| RuntimeError::UnknownFunction(f.to_string()))
    }

    fn model(&self, component: &str) -> Result<&'a ComponentModel, RuntimeError> {
        self.models.get(component).ok_or_else(|| RuntimeError::UnknownComponent(component.to_string()))
    }

    fn duration(&self, t: &TimeSymbol) -> Result<Duration, RuntimeError> {
        match t {
            TimeSymbol::Construct(c) => Ok(self.timing.get(*c)),
            TimeSymbol::Component { component, function } => {
                let model = self.model(component)?;
                let f = model.functions.get(function).ok_or_else(|| crate::hw::StepError::UnknownFunction {
                    component: component.clone(),
                    function: function.clone(),
                })?;
                Ok(f.time.clone())
            }
        }
    }

    /// Fires the component function on the arguments bound by the enclosing
    /// scope, without changing any state.
    fn step(&self, component: &str, function: &str, arity: usize, s: &MachineState) -> Result<crate::hw::StepOutcome, RuntimeError> {
        let args = (1..=arity).map(|i| s.lookup(&format!("arg{i}")).cloned()).collect::<Result<Vec<_>, _>>()?;
        let current = s.global.components.get(component).ok_or_else(|| RuntimeError::UnknownComponent(component.to_string()))?;
        Ok(self.model(component)?.step(current, function, &args)?)
    }

    fn enter(&mut self, f: &str) -> Result<usize, RuntimeError> {
        if self.depth >= self.limit {
            return Err(RuntimeError::RecursionLimit { function: f.to_string(), limit: self.limit });
        }
        let outer_peak = self.peak;
        self.depth += 1;
        self.peak = self.depth;
        Ok(outer_peak)
    }

    /// Leaves an unfolding; returns how many levels it needed below the call
    /// site.
    fn leave(&mut self, outer_peak: usize) -> usize {
        let needed = self.peak - (self.depth - 1);
        self.depth -= 1;
        self.peak = self.peak.max(outer_peak);
        needed
    }

    fn cached(&mut self, key: &(String, TermKind, MachineState)) -> Option<Memo> {
        let (memo, needed) = self.memo.as_ref()?.get(key)?;
        if self.depth + needed > self.limit {
            return None;
        }
        let memo = memo.clone();
        self.peak = self.peak.max(self.depth + needed);
        Some(memo)
    }

    fn store(&mut self, key: Option<(String, TermKind, MachineState)>, memo: Memo, needed: usize) {
        if let (Some(table), Some(key)) = (&mut self.memo, key) {
            table.insert(key, (memo, needed));
        }
    }

    fn key(&self, f: &str, kind: TermKind, s: &MachineState) -> Option<(String, TermKind, MachineState)> {
        self.memo.as_ref().map(|_| (f.to_string(), kind, s.clone()))
    }

    fn unfold_value(&mut self, f: &str, s: &MachineState) -> Result<Value, RuntimeError> {
        let key = self.key(f, TermKind::Value, s);
        if let Some(Memo::Value(v)) = key.as_ref().and_then(|k| self.cached(k)) {
            return Ok(v);
        }
        let j = self.judgment(f)?;
        let outer = self.enter(f)?;
        let r = self.eval_value(&j.value, s);
        let needed = self.leave(outer);
        let v = r?;
        self.store(key, Memo::Value(v.clone()), needed);
        Ok(v)
    }

    fn unfold_state(&mut self, f: &str, s: MachineState) -> Result<MachineState, RuntimeError> {
        let key = self.key(f, TermKind::State, &s);
        if let Some(Memo::State(out)) = key.as_ref().and_then(|k| self.cached(k)) {
            return Ok(out);
        }
        let j = self.judgment(f)?;
        let outer = self.enter(f)?;
        let r = self.eval_state(&j.state, s);
        let needed = self.leave(outer);
        let out = r?;
        self.store(key, Memo::State(out.clone()), needed);
        Ok(out)
    }

    fn unfold_energy(&mut self, f: &str, s: &MachineState) -> Result<(), RuntimeError> {
        let j = self.judgment(f)?;
        let outer = self.enter(f)?;
        let r = self.eval_energy(&j.energy, s);
        self.leave(outer);
        r
    }

    fn condition(&mut self, t: &Term, s: &MachineState) -> Result<bool, RuntimeError> {
        let v = self.eval_value(t, s)?;
        v.as_bool().ok_or(RuntimeError::ValueType { expected: Type::Bool, found: v.ty() })
    }

    /// Callee state built by a `Scope`: arguments evaluated left to right.
    fn scope(&mut self, params: &[String], args: &[(super::TermRef, super::TermRef)], s: &MachineState) -> Result<MachineState, RuntimeError> {
        let mut current = s.clone();
        let mut frame = Vec::with_capacity(args.len());
        for (name, (v, st)) in params.iter().zip(args) {
            frame.push((name.clone(), self.eval_value(v, &current)?));
            current = self.eval_state(st, current)?;
        }
        Ok(MachineState { locals: LocalState::with_frame(frame), global: current.global })
    }

    pub fn eval_value(&mut self, t: &Term, s: &MachineState) -> Result<Value, RuntimeError> {
        match t {
            Term::ConstV(v) => Ok(v.clone()),
            Term::Lookup(x) => s.lookup(x).cloned(),
            Term::BinOpV(op, a, b) => {
                let a = self.eval_value(a, s)?;
                let b = self.eval_value(b, s)?;
                Ok(apply_binop(*op, &a, &b)?)
            }
            Term::ConstructV { name, fields } => {
                let mut values = Vec::with_capacity(fields.len());
                for (field, v) in fields {
                    values.push((field.clone(), self.eval_value(v, s)?));
                }
                Ok(Value::Struct { name: name.clone(), fields: values })
            }
            Term::FieldV(base, field) => project(&self.eval_value(base, s)?, field),
            Term::CmpValue { component, function, arity } => Ok(self.step(component, function, *arity, s)?.value),
            Term::Compose(a, b) => {
                let mid = self.eval_state(a, s.clone())?;
                self.eval_value(b, &mid)
            }
            Term::Cond { cond_v, cond_s, then, otherwise } => {
                let c = self.condition(cond_v, s)?;
                let mid = self.eval_state(cond_s, s.clone())?;
                self.eval_value(if c { then } else { otherwise }, &mid)
            }
            Term::Subst(TermKind::Value, f) | Term::Rec(TermKind::Value, f) => self.unfold_value(f, s),
            other => Err(kind_error("value", other)),
        }
    }

    pub fn eval_state(&mut self, t: &Term, mut s: MachineState) -> Result<MachineState, RuntimeError> {
        match t {
            Term::Id => Ok(s),
            Term::Compose(a, b) => {
                let mid = self.eval_state(a, s)?;
                self.eval_state(b, mid)
            }
            Term::Declare { name, value, state } => {
                let v = self.eval_value(value, &s)?;
                let mut out = self.eval_state(state, s)?;
                out.locals.declare(name, v);
                Ok(out)
            }
            Term::Update { name, value, state } => {
                let v = self.eval_value(value, &s)?;
                let mut out = self.eval_state(state, s)?;
                out.assign(name, v)?;
                Ok(out)
            }
            Term::DeclareGlobal { name, value, state } => {
                let v = self.eval_value(value, &s)?;
                let mut out = self.eval_state(state, s)?;
                out.global.globals.insert(name.clone(), v);
                Ok(out)
            }
            Term::CmpEffect { component, function, arity } => {
                let step = self.step(component, function, *arity, &s)?;
                s.global.components.insert(component.clone(), step.to);
                Ok(s)
            }
            Term::Scope { params, args } => self.scope(params, args, &s),
            Term::Split(locals, global) => {
                let l = self.eval_state(locals, s.clone())?;
                let g = self.eval_state(global, s)?;
                Ok(MachineState { locals: l.locals, global: g.global })
            }
            Term::Block(inner) => {
                s.locals.push();
                let mut out = self.eval_state(inner, s)?;
                out.locals.pop();
                Ok(out)
            }
            Term::Cond { cond_v, cond_s, then, otherwise } => {
                let c = self.condition(cond_v, &s)?;
                let mid = self.eval_state(cond_s, s)?;
                self.eval_state(if c { then } else { otherwise }, mid)
            }
            Term::LoopState { cond_v, cond_s, body_s } => loop {
                let c = self.condition(cond_v, &s)?;
                s = self.eval_state(cond_s, s)?;
                if !c {
                    return Ok(s);
                }
                s = self.eval_block_state(body_s, s)?;
            },
            Term::RepeatState { count_v, count_s, body_s } => {
                let n = repeat_count(&self.eval_value(count_v, &s)?)?;
                s = self.eval_state(count_s, s)?;
                for _ in 0..n {
                    s = self.eval_block_state(body_s, s)?;
                }
                Ok(s)
            }
            Term::Subst(TermKind::State, f) | Term::Rec(TermKind::State, f) => self.unfold_state(f, s),
            other => Err(kind_error("state", other)),
        }
    }

    fn eval_block_state(&mut self, t: &Term, mut s: MachineState) -> Result<MachineState, RuntimeError> {
        s.locals.push();
        let mut out = self.eval_state(t, s)?;
        out.locals.pop();
        Ok(out)
    }

    fn eval_block_energy(&mut self, t: &Term, s: &MachineState) -> Result<(), RuntimeError> {
        let mut inner = s.clone();
        inner.locals.push();
        self.eval_energy(t, &inner)
    }

    pub fn eval_energy(&mut self, t: &Term, s: &MachineState) -> Result<(), RuntimeError> {
        match t {
            Term::ZeroE => Ok(()),
            Term::TdEc(sym) => {
                let d = self.duration(sym)?;
                let label = || match sym {
                    TimeSymbol::Construct(c) => ChargeLabel::Construct(*c),
                    TimeSymbol::Component { component, function } => {
                        ChargeLabel::Component { component: component.clone(), function: function.clone() }
                    }
                };
                self.ledger.charge_time(label, &d, self.models, &s.global.components)
            }
            Term::CmpEnergy { component, function, arity } => {
                let step = self.step(component, function, *arity, s)?;
                self.ledger.charge_transition(component, function, &step);
                Ok(())
            }
            Term::Plus(a, b) => {
                self.eval_energy(a, s)?;
                self.eval_energy(b, s)
            }
            Term::Compose(a, b) => {
                let mid = self.eval_state(a, s.clone())?;
                self.eval_energy(b, &mid)
            }
            Term::Block(inner) => self.eval_block_energy(inner, s),
            Term::Cond { cond_v, cond_s, then, otherwise } => {
                let c = self.condition(cond_v, s)?;
                let mid = self.eval_state(cond_s, s.clone())?;
                self.eval_energy(if c { then } else { otherwise }, &mid)
            }
            Term::LoopEnergy { cond_v, cond_s, cond_e, body_s, body_e } => {
                let mut s = s.clone();
                loop {
                    self.eval_energy(cond_e, &s)?;
                    let c = self.condition(cond_v, &s)?;
                    s = self.eval_state(cond_s, s)?;
                    if !c {
                        return Ok(());
                    }
                    self.eval_block_energy(body_e, &s)?;
                    s = self.eval_block_state(body_s, s)?;
                }
            }
            Term::RepeatEnergy { count_v, count_s, body_s, body_e } => {
                let n = repeat_count(&self.eval_value(count_v, s)?)?;
                let mut s = self.eval_state(count_s, s.clone())?;
                for _ in 0..n {
                    self.eval_block_energy(body_e, &s)?;
                    s = self.eval_block_state(body_s, s)?;
                }
                Ok(())
            }
            Term::Subst(TermKind::Energy, f) | Term::Rec(TermKind::Energy, f) => self.unfold_energy(f, s),
            other => Err(kind_error("energy", other)),
        }
    }
}

fn kind_error(expected: &'static str, t: &Term) -> RuntimeError {
    RuntimeError::MalformedTerm { expected, found: super::print::print_symbolic(t) }
}

/// Evaluates `analysis` as a whole program: the global initializers on the
/// initial component states, then `main`'s judgment on its callee state at
/// call depth 1.
pub fn evaluate_program(
    analysis: &Analysis,
    models: &ModelSet,
    timing: &TimingTable,
    program: &crate::types::TypedProgram,
    inputs: &BTreeMap<String, Value>,
    options: &RunOptions,
) -> Result<RunResult, RuntimeError> {
    let main = program.function(&analysis.main).ok_or(RuntimeError::MissingMain)?;
    let frame = bind_inputs(main, inputs)?;
    on_big_stack(options.recursion_limit, || {
        let mut ev = Evaluator::new(analysis, models, timing, options);
        let start = MachineState {
            locals: LocalState::new(),
            global: GState { globals: GlobalState::new(), components: models.initial_states() },
        };
        ev.eval_energy(&analysis.init_energy, &start)?;
        let after_globals = ev.eval_state(&analysis.init_state, start)?;

        let j = analysis.main();
        let entry = MachineState { locals: LocalState::with_frame(frame), global: after_globals.global };
        ev.set_depth(1);
        ev.eval_energy(&j.energy, &entry)?;
        let value = ev.eval_value(&j.value, &entry)?;
        let last = ev.eval_state(&j.state, entry)?;
        let energy = ev.ledger.total();
        let breakdown = ev.ledger.breakdown.clone();
        Ok(RunResult {
            value,
            locals: last.locals,
            globals: last.global.globals,
            components: last.global.components,
            energy,
            breakdown,
            trace: ev.ledger.into_trace(),
        })
    })
}
