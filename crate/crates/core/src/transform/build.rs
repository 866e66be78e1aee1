use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::term::{Term, TermKind, TermRef};
use crate::syntax::{Expr, ExprKind, Literal, Stmt, StmtKind, Type};
use crate::timing::Construct;
use crate::types::TypedProgram;
use crate::value::Value;

/// The (V, Σ, E) terms of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub value: TermRef,
    pub state: TermRef,
    pub energy: TermRef,
}

/// The (Σ, E) terms of a statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub state: TermRef,
    pub energy: TermRef,
}

/// The installed judgment of a language function, evaluated on its callee
/// state (parameters bound in a fresh local scope).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionJudgment {
    pub name: String,
    pub params: Vec<String>,
    pub returns: Type,
    pub value: TermRef,
    pub state: TermRef,
    pub energy: TermRef,
}

impl FunctionJudgment {
    pub fn term(&self, kind: TermKind) -> &TermRef {
        match kind {
            TermKind::Value => &self.value,
            TermKind::State => &self.state,
            TermKind::Energy => &self.energy,
        }
    }
}

/// Result of transforming a whole program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    pub functions: BTreeMap<String, FunctionJudgment>,
    /// Σ of the global initializers, run in declaration order.
    pub init_state: TermRef,
    /// E of the global initializers.
    pub init_energy: TermRef,
    /// Name of the entry function.
    pub main: String,
}

impl Analysis {
    pub fn main(&self) -> &FunctionJudgment {
        &self.functions[&self.main]
    }

    /// Every judgment in symbolic form, functions in name order, then the
    /// global initializers.
    pub fn render_terms(&self) -> String {
        let mut out = String::new();
        for j in self.functions.values() {
            let params = j.params.join(", ");
            out.push_str(&format!("{} {}({params})\n", j.returns, j.name));
            for kind in [TermKind::Value, TermKind::State, TermKind::Energy] {
                out.push_str(&format!("  {} = {}\n", kind.symbol(), j.term(kind)));
            }
        }
        out.push_str("globals\n");
        out.push_str(&format!("  Σ = {}\n  E = {}\n", self.init_state, self.init_energy));
        out
    }

    /// JSON summary: function names and distinct-node counts per term.
    pub fn metadata(&self) -> serde_json::Value {
        let functions: serde_json::Map<String, serde_json::Value> = self
            .functions
            .values()
            .map(|j| {
                let sizes = serde_json::json!({
                    "params": j.params,
                    "V": Term::size(&j.value),
                    "Σ": Term::size(&j.state),
                    "E": Term::size(&j.energy),
                    "recursive": !Term::rec_targets(&j.energy).is_empty() || !Term::rec_targets(&j.state).is_empty(),
                });
                (j.name.clone(), sizes)
            })
            .collect();
        serde_json::json!({
            "main": self.main,
            "functions": functions,
            "globals": { "Σ": Term::size(&self.init_state), "E": Term::size(&self.init_energy) },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("program has no `main` function")]
    MissingMain,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown struct `{0}`")]
    UnknownStruct(String),
}

/// The function judgments installed so far, plus the functions whose
/// bodies are being transformed (calls to those become `Rec` placeholders).
pub struct AnalysisEnv<'p> {
    program: &'p TypedProgram,
    installed: BTreeMap<String, FunctionJudgment>,
    in_progress: BTreeSet<String>,
}

impl<'p> AnalysisEnv<'p> {
    pub fn new(program: &'p TypedProgram) -> Self {
        AnalysisEnv { program, installed: BTreeMap::new(), in_progress: BTreeSet::new() }
    }

    pub fn installed(&self) -> &BTreeMap<String, FunctionJudgment> {
        &self.installed
    }

    /// Transforms `name` unless it is installed or already underway.
    pub fn ensure_function(&mut self, name: &str) -> Result<(), TransformError> {
        if self.installed.contains_key(name) || self.in_progress.contains(name) {
            return Ok(());
        }
        let f = self.program.function(name).ok_or_else(|| TransformError::UnknownFunction(name.to_string()))?;
        self.in_progress.insert(name.to_string());
        let body = transform_expr(&f.body, self)?;
        self.in_progress.remove(name);
        let value = if f.return_type == Type::Void { Arc::new(Term::ConstV(Value::Unit)) } else { body.value };
        self.installed.insert(
            name.to_string(),
            FunctionJudgment {
                name: name.to_string(),
                params: f.params.iter().map(|(p, _)| p.clone()).collect(),
                returns: f.return_type.clone(),
                value,
                state: body.state,
                energy: body.energy,
            },
        );
        Ok(())
    }

    fn callee(&mut self, name: &str, kind: TermKind) -> Result<TermRef, TransformError> {
        if self.in_progress.contains(name) {
            return Ok(Arc::new(Term::Rec(kind, name.to_string())));
        }
        self.ensure_function(name)?;
        Ok(Arc::new(Term::Subst(kind, name.to_string())))
    }
}

/// Left-to-right argument evaluation.
struct Args {
    /// Each argument's (V, Σ) on the state its predecessors leave.
    raw: Vec<(TermRef, TermRef)>,
    /// Each argument's V on the call's input state.
    values: Vec<TermRef>,
    /// Σ of all arguments in sequence.
    state: TermRef,
    /// E of all arguments in sequence.
    energy: TermRef,
}

fn args(args: &[Expr<Type>], env: &mut AnalysisEnv) -> Result<Args, TransformError> {
    let mut out = Args { raw: Vec::new(), values: Vec::new(), state: Term::id(), energy: Term::zero() };
    for a in args {
        let t = transform_expr(a, env)?;
        out.values.push(Term::compose(&out.state, &t.value));
        out.energy = Term::plus(&out.energy, &Term::compose(&out.state, &t.energy));
        out.state = Term::compose(&out.state, &t.state);
        out.raw.push((t.value, t.state));
    }
    Ok(out)
}

fn positional(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("arg{i}")).collect()
}

pub fn transform_expr(e: &Expr<Type>, env: &mut AnalysisEnv) -> Result<Triple, TransformError> {
    let td = Term::td;
    Ok(match &e.kind {
        ExprKind::Const(l) => Triple {
            value: Arc::new(Term::ConstV(Value::from(l))),
            state: Term::id(),
            energy: if *l == Literal::Unit { Term::zero() } else { td(Construct::Const) },
        },
        ExprKind::Var(x) => Triple { value: Arc::new(Term::Lookup(x.clone())), state: Term::id(), energy: td(Construct::Var) },
        ExprKind::BinOp(op, a, b) => {
            let a = transform_expr(a, env)?;
            let b = transform_expr(b, env)?;
            let state = Term::compose(&a.state, &b.state);
            let operands = Term::plus(&a.energy, &Term::compose(&a.state, &b.energy));
            Triple {
                value: Arc::new(Term::BinOpV(*op, a.value, Term::compose(&a.state, &b.value))),
                energy: Term::plus(&operands, &Term::compose(&state, &td(Construct::BinOp))),
                state,
            }
        }
        ExprKind::Construct(name, fields) => {
            let layout = crate::types::resolve_struct(env.program, name)
                .map_err(|_| TransformError::UnknownStruct(name.clone()))?
                .iter()
                .map(|(f, _)| f.clone())
                .collect::<Vec<_>>();
            let a = args(fields, env)?;
            Triple {
                value: Arc::new(Term::ConstructV { name: name.clone(), fields: layout.into_iter().zip(a.values).collect() }),
                energy: Term::plus(&a.energy, &Term::compose(&a.state, &td(Construct::Construct))),
                state: a.state,
            }
        }
        ExprKind::Field(base, field) => {
            let b = transform_expr(base, env)?;
            Triple {
                value: Arc::new(Term::FieldV(b.value, field.clone())),
                energy: Term::plus(&b.energy, &Term::compose(&b.state, &td(Construct::FieldAccess))),
                state: b.state,
            }
        }
        ExprKind::Decl(_, x, init) => {
            let i = transform_expr(init, env)?;
            Triple {
                state: Arc::new(Term::Declare { name: x.clone(), value: i.value.clone(), state: i.state.clone() }),
                energy: Term::plus(&i.energy, &Term::compose(&i.state, &td(Construct::Decl))),
                value: i.value,
            }
        }
        ExprKind::Assign(x, rhs) => {
            let r = transform_expr(rhs, env)?;
            Triple {
                state: Arc::new(Term::Update { name: x.clone(), value: r.value.clone(), state: r.state.clone() }),
                energy: Term::plus(&r.energy, &Term::compose(&r.state, &td(Construct::Assign))),
                value: r.value,
            }
        }
        ExprKind::ComponentCall { component, function, args: call_args } => {
            let a = args(call_args, env)?;
            let arity = call_args.len();
            let scope = Arc::new(Term::Scope { params: positional(arity), args: a.raw });
            let (component, function) = (component.clone(), function.clone());
            let time = Arc::new(Term::TdEc(super::TimeSymbol::Component { component: component.clone(), function: function.clone() }));
            let value = Arc::new(Term::CmpValue { component: component.clone(), function: function.clone(), arity });
            let effect = Arc::new(Term::CmpEffect { component: component.clone(), function: function.clone(), arity });
            let energy = Arc::new(Term::CmpEnergy { component, function, arity });
            Triple {
                value: Term::compose(&scope, &value),
                state: Arc::new(Term::Split(a.state, Term::compose(&scope, &effect))),
                energy: Term::plus(&a.energy, &Term::compose(&scope, &Term::plus(&time, &energy))),
            }
        }
        ExprKind::Call(name, call_args) => {
            let a = args(call_args, env)?;
            let f = env.program.function(name).ok_or_else(|| TransformError::UnknownFunction(name.clone()))?;
            let params = f.params.iter().map(|(p, _)| p.clone()).collect();
            let scope = Arc::new(Term::Scope { params, args: a.raw });
            let (v, s, en) = (
                env.callee(name, TermKind::Value)?,
                env.callee(name, TermKind::State)?,
                env.callee(name, TermKind::Energy)?,
            );
            let before_body = Term::plus(&a.energy, &Term::compose(&a.state, &td(Construct::Call)));
            Triple {
                value: Term::compose(&scope, &v),
                state: Arc::new(Term::Split(a.state, Term::compose(&scope, &s))),
                energy: Term::plus(&before_body, &Term::compose(&scope, &en)),
            }
        }
        ExprKind::Comma(s, e) => {
            let s = transform_stmt(s, env)?;
            let e = transform_expr(e, env)?;
            Triple {
                value: Term::compose(&s.state, &e.value),
                energy: Term::plus(&s.energy, &Term::compose(&s.state, &e.energy)),
                state: Term::compose(&s.state, &e.state),
            }
        }
    })
}

fn block(t: TermRef) -> TermRef {
    Arc::new(Term::Block(t))
}

pub fn transform_stmt(s: &Stmt<Type>, env: &mut AnalysisEnv) -> Result<Pair, TransformError> {
    let td = Term::td;
    Ok(match &s.kind {
        StmtKind::Skip => Pair { state: Term::id(), energy: td(Construct::Skip) },
        StmtKind::Seq(a, b) => {
            let a = transform_stmt(a, env)?;
            let b = transform_stmt(b, env)?;
            Pair {
                state: Term::compose(&a.state, &b.state),
                energy: Term::plus(&td(Construct::Seq), &Term::plus(&a.energy, &Term::compose(&a.state, &b.energy))),
            }
        }
        StmtKind::Expr(e) => {
            let e = transform_expr(e, env)?;
            Pair { state: e.state, energy: e.energy }
        }
        StmtKind::If(c, then, otherwise) => {
            let c = transform_expr(c, env)?;
            let then = transform_stmt(then, env)?;
            let (else_s, else_e) = match otherwise {
                Some(o) => {
                    let o = transform_stmt(o, env)?;
                    (block(o.state), block(o.energy))
                }
                None => (Term::id(), Term::zero()),
            };
            let state = Arc::new(Term::Cond {
                cond_v: c.value.clone(),
                cond_s: c.state.clone(),
                then: block(then.state),
                otherwise: else_s,
            });
            let branch = Arc::new(Term::Cond {
                cond_v: c.value,
                cond_s: c.state.clone(),
                then: block(then.energy),
                otherwise: else_e,
            });
            let head = Term::plus(&c.energy, &Term::compose(&c.state, &td(Construct::If)));
            Pair { state, energy: Term::plus(&head, &branch) }
        }
        StmtKind::While(c, body) => {
            let c = transform_expr(c, env)?;
            let b = transform_stmt(body, env)?;
            let state = Arc::new(Term::LoopState { cond_v: c.value.clone(), cond_s: c.state.clone(), body_s: b.state.clone() });
            let energy = Arc::new(Term::LoopEnergy {
                cond_v: c.value,
                cond_s: c.state,
                cond_e: c.energy,
                body_s: b.state,
                body_e: b.energy,
            });
            Pair { state, energy: Term::plus(&td(Construct::While), &energy) }
        }
        StmtKind::Repeat(n, body) => {
            let n = transform_expr(n, env)?;
            let b = transform_stmt(body, env)?;
            let state = Arc::new(Term::RepeatState { count_v: n.value.clone(), count_s: n.state.clone(), body_s: b.state.clone() });
            let iterations =
                Arc::new(Term::RepeatEnergy { count_v: n.value, count_s: n.state.clone(), body_s: b.state, body_e: b.energy });
            let head = Term::plus(&n.energy, &Term::compose(&n.state, &td(Construct::Repeat)));
            Pair { state, energy: Term::plus(&head, &iterations) }
        }
    })
}

/// Transforms every function (callees before callers, recursive calls as
/// `Rec` placeholders) and the global initializers.
pub fn transform_program(program: &TypedProgram) -> Result<Analysis, TransformError> {
    let main = program.function("main").ok_or(TransformError::MissingMain)?;
    let mut env = AnalysisEnv::new(program);
    for f in &program.program.functions {
        env.ensure_function(&f.name)?;
    }

    // Each initializer runs in a scratch scope and ends by binding the global.
    let mut steps = Vec::new();
    for g in &program.program.globals {
        let i = transform_expr(&g.init, &mut env)?;
        let state = block(Arc::new(Term::DeclareGlobal { name: g.name.clone(), value: i.value, state: i.state.clone() }));
        let energy = block(Term::plus(&i.energy, &Term::compose(&i.state, &Term::td(Construct::Decl))));
        steps.push((state, energy));
    }
    let (mut init_state, mut init_energy) = (Term::id(), Term::zero());
    for (state, energy) in steps.into_iter().rev() {
        init_energy = Term::plus(&energy, &Term::compose(&state, &init_energy));
        init_state = Term::compose(&state, &init_state);
    }

    Ok(Analysis { functions: env.installed, init_state, init_energy, main: main.name.clone() })
}
