//! Reference energy-aware interpreter over (σ, G, Γ).
//!
//! Every construct charges Φ(Γ)·t for its timing entry, where Γ is the
//! component state once the construct's subexpressions have been evaluated.
//! Statements that open a scope (`if` branches, loop bodies) run in a child
//! frame of σ. The term evaluator in [`crate::transform`] mirrors these
//! charging points one for one.

use std::collections::BTreeMap;

use num_traits::{Signed, ToPrimitive};

use crate::hw::ModelSet;
use crate::runtime::*;
use crate::syntax::{Expr, ExprKind, Literal, Stmt, StmtKind, Type};
use crate::timing::{Construct, TimingTable};
use crate::types::TypedProgram;
use crate::value::{apply_binop, Value};

pub use crate::runtime::{RunOptions, RunResult, RuntimeError};

pub struct Interpreter<'a> {
    program: &'a TypedProgram,
    models: &'a ModelSet,
    timing: &'a TimingTable,
    limit: usize,
    depth: usize,
    pub state: MachineState,
    pub ledger: Ledger,
}

impl<'a> Interpreter<'a> {
    /// An interpreter with no globals and every component in its initial
    /// state.
    pub fn new(program: &'a TypedProgram, models: &'a ModelSet, timing: &'a TimingTable, options: &RunOptions) -> Self {
        Interpreter {
            program,
            models,
            timing,
            limit: options.recursion_limit,
            depth: 0,
            state: MachineState {
                locals: LocalState::new(),
                global: GState { globals: GlobalState::new(), components: models.initial_states() },
            },
            ledger: Ledger::new(models, options.record_trace),
        }
    }

    fn charge(&mut self, c: Construct) -> Result<(), RuntimeError> {
        let t = self.timing.get(c);
        self.ledger.charge_time(|| ChargeLabel::Construct(c), &t, self.models, &self.state.global.components)
    }

    fn args(&mut self, args: &[Expr<Type>]) -> Result<Vec<Value>, RuntimeError> {
        args.iter().map(|a| self.eval_expr(a)).collect()
    }

    pub fn eval_expr(&mut self, e: &Expr<Type>) -> Result<Value, RuntimeError> {
        match &e.kind {
            ExprKind::Const(l) => {
                // the implicit result of a statement body is free
                if *l != Literal::Unit {
                    self.charge(Construct::Const)?;
                }
                Ok(Value::from(l))
            }
            ExprKind::Var(x) => {
                self.charge(Construct::Var)?;
                self.state.lookup(x).cloned()
            }
            ExprKind::BinOp(op, a, b) => {
                let a = self.eval_expr(a)?;
                let b = self.eval_expr(b)?;
                self.charge(Construct::BinOp)?;
                Ok(apply_binop(*op, &a, &b)?)
            }
            ExprKind::Construct(name, args) => {
                let values = self.args(args)?;
                self.charge(Construct::Construct)?;
                build_struct(self.program, name, values)
            }
            ExprKind::Field(base, field) => {
                let base = self.eval_expr(base)?;
                self.charge(Construct::FieldAccess)?;
                project(&base, field)
            }
            ExprKind::Decl(_, x, init) => {
                let v = self.eval_expr(init)?;
                self.charge(Construct::Decl)?;
                self.state.locals.declare(x, v.clone());
                Ok(v)
            }
            ExprKind::Assign(x, rhs) => {
                let v = self.eval_expr(rhs)?;
                self.charge(Construct::Assign)?;
                self.state.assign(x, v.clone())?;
                Ok(v)
            }
            ExprKind::ComponentCall { component, function, args } => {
                let args = self.args(args)?;
                self.call_component(component, function, &args)
            }
            ExprKind::Call(f, args) => {
                let args = self.args(args)?;
                self.call_function(f, args)
            }
            ExprKind::Comma(s, e) => {
                self.exec_stmt(s)?;
                self.eval_expr(e)
            }
        }
    }

    /// Fires `component::function` on already evaluated arguments: the time
    /// draw Φ(Γ')·t_f is priced before the transition, then the transition
    /// energy is added and Γ updated.
    pub fn call_component(&mut self, component: &str, function: &str, args: &[Value]) -> Result<Value, RuntimeError> {
        let model = self.models.get(component).ok_or_else(|| RuntimeError::UnknownComponent(component.to_string()))?;
        let current = &self.state.global.components[component];
        let step = model.step(current, function, args)?;
        let label = || ChargeLabel::Component { component: component.to_string(), function: function.to_string() };
        self.ledger.charge_time(label, &step.duration, self.models, &self.state.global.components)?;
        self.ledger.charge_transition(component, function, &step);
        self.state.global.components.insert(component.to_string(), step.to.clone());
        Ok(step.value)
    }

    /// Calls a language function on already evaluated arguments. The callee
    /// sees only its parameters; the caller's locals are restored afterwards.
    pub fn call_function(&mut self, name: &str, args: Vec<Value>) -> Result<Value, RuntimeError> {
        self.charge(Construct::Call)?;
        if self.depth >= self.limit {
            return Err(RuntimeError::RecursionLimit { function: name.to_string(), limit: self.limit });
        }
        let f = self.program.function(name).ok_or_else(|| RuntimeError::UnknownFunction(name.to_string()))?;
        let frame = f.params.iter().map(|(p, _)| p.clone()).zip(args);
        let caller = std::mem::replace(&mut self.state.locals, LocalState::with_frame(frame));
        self.depth += 1;
        let result = self.eval_expr(&f.body);
        self.depth -= 1;
        self.state.locals = caller;
        let v = result?;
        Ok(if f.return_type == Type::Void { Value::Unit } else { v })
    }

    fn block(&mut self, s: &Stmt<Type>) -> Result<(), RuntimeError> {
        self.state.locals.push();
        let r = self.exec_stmt(s);
        self.state.locals.pop();
        r
    }

    fn condition(&mut self, e: &Expr<Type>) -> Result<bool, RuntimeError> {
        let v = self.eval_expr(e)?;
        v.as_bool().ok_or(RuntimeError::ValueType { expected: Type::Bool, found: v.ty() })
    }

    pub fn exec_stmt(&mut self, s: &Stmt<Type>) -> Result<(), RuntimeError> {
        match &s.kind {
            StmtKind::Skip => self.charge(Construct::Skip),
            StmtKind::Seq(a, b) => {
                self.charge(Construct::Seq)?;
                self.exec_stmt(a)?;
                self.exec_stmt(b)
            }
            StmtKind::Expr(e) => self.eval_expr(e).map(drop),
            StmtKind::If(c, then, otherwise) => {
                let c = self.condition(c)?;
                self.charge(Construct::If)?;
                match (c, otherwise) {
                    (true, _) => self.block(then),
                    (false, Some(otherwise)) => self.block(otherwise),
                    (false, None) => Ok(()),
                }
            }
            StmtKind::While(c, body) => {
                self.charge(Construct::While)?;
                while self.condition(c)? {
                    self.block(body)?;
                }
                Ok(())
            }
            StmtKind::Repeat(n, body) => {
                let count = self.eval_expr(n)?;
                self.charge(Construct::Repeat)?;
                for _ in 0..repeat_count(&count)? {
                    self.block(body)?;
                }
                Ok(())
            }
        }
    }

    /// Evaluates the global initializers in declaration order. Each one runs
    /// with an empty local state and is charged as a declaration.
    pub fn init_globals(&mut self) -> Result<(), RuntimeError> {
        for g in &self.program.program.globals {
            self.state.locals = LocalState::with_frame([]);
            let v = self.eval_expr(&g.init)?;
            self.charge(Construct::Decl)?;
            self.state.global.globals.insert(g.name.clone(), v);
        }
        self.state.locals = LocalState::new();
        Ok(())
    }

    /// Runs `main`'s body as call depth 1 with the given inputs bound.
    pub fn run_main(&mut self, inputs: &BTreeMap<String, Value>) -> Result<Value, RuntimeError> {
        let main = self.program.function("main").ok_or(RuntimeError::MissingMain)?;
        let frame = bind_inputs(main, inputs)?;
        self.state.locals = LocalState::with_frame(frame);
        self.depth = 1;
        let v = self.eval_expr(&main.body)?;
        self.depth = 0;
        Ok(if main.return_type == Type::Void { Value::Unit } else { v })
    }

    pub fn finish(self, value: Value) -> RunResult {
        let energy = self.ledger.total();
        RunResult {
            value,
            locals: self.state.locals,
            globals: self.state.global.globals,
            components: self.state.global.components,
            energy,
            breakdown: self.ledger.breakdown.clone(),
            trace: self.ledger.into_trace(),
        }
    }
}

pub(crate) fn build_struct(program: &TypedProgram, name: &str, values: Vec<Value>) -> Result<Value, RuntimeError> {
    let layout = crate::types::resolve_struct(program, name)
        .map_err(|_| RuntimeError::ValueType { expected: Type::Struct(name.to_string()), found: Type::Void })?;
    let fields = layout.iter().map(|(f, _)| f.clone()).zip(values).collect();
    Ok(Value::Struct { name: name.to_string(), fields })
}

pub(crate) fn project(base: &Value, field: &str) -> Result<Value, RuntimeError> {
    base.field(field).cloned().ok_or_else(|| RuntimeError::NoField { field: field.to_string(), value: base.to_string() })
}

pub(crate) fn repeat_count(count: &Value) -> Result<u64, RuntimeError> {
    let n = count.as_int().ok_or(RuntimeError::ValueType { expected: Type::Int, found: count.ty() })?;
    if n.is_negative() {
        return Err(RuntimeError::NegativeRepeat { count: n.clone() });
    }
    n.to_u64().ok_or_else(|| RuntimeError::RepeatOverflow { count: n.clone() })
}

/// Runs `program`: components start in their initial states, globals are
/// initialized in order, then `main` is called with `inputs`. The recursion
/// limit honours `ECA_RECURSION_LIMIT`.
pub fn run(
    program: &TypedProgram,
    models: &ModelSet,
    timing: &TimingTable,
    inputs: &BTreeMap<String, Value>,
) -> Result<RunResult, RuntimeError> {
    run_with(program, models, timing, inputs, &RunOptions::from_env())
}

pub fn run_with(
    program: &TypedProgram,
    models: &ModelSet,
    timing: &TimingTable,
    inputs: &BTreeMap<String, Value>,
    options: &RunOptions,
) -> Result<RunResult, RuntimeError> {
    on_big_stack(options.recursion_limit, || {
        let mut it = Interpreter::new(program, models, timing, options);
        it.init_globals()?;
        let value = it.run_main(inputs)?;
        Ok(it.finish(value))
    })
}
