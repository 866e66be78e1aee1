use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::syntax::BinOp;
use crate::timing::Construct;
use crate::value::Value;

pub type TermRef = Arc<Term>;

/// Which of the three functions of a judgment a term denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    /// V: state → value
    Value,
    /// Σ: state → state
    State,
    /// E: state → energy
    Energy,
}

impl TermKind {
    pub fn symbol(self) -> &'static str {
        match self {
            TermKind::Value => "V",
            TermKind::State => "Σ",
            TermKind::Energy => "E",
        }
    }
}

/// A duration whose value is looked up when the term is evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TimeSymbol {
    Construct(Construct),
    /// t_f of a component function.
    Component { component: String, function: String },
}

/// Combinator terms over machine states (σ, G, Γ).
///
/// `Compose(a, b)` runs the state term `a` and feeds the result to `b`, which
/// may be of any kind. `Plus` evaluates both energy operands on the same
/// input state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    ConstV(Value),
    /// Local binding if present, else global.
    Lookup(String),
    /// The right operand is already composed with the left operand's Σ.
    BinOpV(BinOp, TermRef, TermRef),
    /// Field terms are already composed with the preceding arguments' Σ.
    ConstructV { name: String, fields: Vec<(String, TermRef)> },
    FieldV(TermRef, String),
    /// Return value of a component call; arguments come from the scope
    /// bindings `arg1..argN`.
    CmpValue { component: String, function: String, arity: usize },

    Id,
    /// `state`, then bind `name` in the innermost scope to `value` (taken on
    /// the input state).
    Declare { name: String, value: TermRef, state: TermRef },
    /// `state`, then overwrite the local binding of `name` if there is one,
    /// else the global.
    Update { name: String, value: TermRef, state: TermRef },
    DeclareGlobal { name: String, value: TermRef, state: TermRef },
    CmpEffect { component: String, function: String, arity: usize },
    /// Callee state: fresh locals binding `params` to the arguments, which
    /// are evaluated left to right as (V, Σ) pairs, and the global state the
    /// arguments leave behind.
    Scope { params: Vec<String>, args: Vec<(TermRef, TermRef)> },
    /// Locals from the first state term, globals from the second.
    Split(TermRef, TermRef),
    /// Runs the inner term in a child scope.
    Block(TermRef),
    LoopState { cond_v: TermRef, cond_s: TermRef, body_s: TermRef },
    RepeatState { count_v: TermRef, count_s: TermRef, body_s: TermRef },

    ZeroE,
    /// Φ(Γ)·t
    TdEc(TimeSymbol),
    CmpEnergy { component: String, function: String, arity: usize },
    Plus(TermRef, TermRef),
    LoopEnergy { cond_v: TermRef, cond_s: TermRef, cond_e: TermRef, body_s: TermRef, body_e: TermRef },
    RepeatEnergy { count_v: TermRef, count_s: TermRef, body_s: TermRef, body_e: TermRef },

    Compose(TermRef, TermRef),
    /// Evaluates `cond_v`, moves to `cond_s`, then runs one branch.
    Cond { cond_v: TermRef, cond_s: TermRef, then: TermRef, otherwise: TermRef },
    /// Call site of an installed function: one-step unfolding of its judgment.
    Subst(TermKind, String),
    /// Placeholder for a function whose judgment is still being built.
    Rec(TermKind, String),
}

impl Term {
    pub fn id() -> TermRef {
        Arc::new(Term::Id)
    }

    pub fn zero() -> TermRef {
        Arc::new(Term::ZeroE)
    }

    pub fn td(c: Construct) -> TermRef {
        Arc::new(Term::TdEc(TimeSymbol::Construct(c)))
    }

    /// `a ≫ b`, dropping identities.
    pub fn compose(a: &TermRef, b: &TermRef) -> TermRef {
        match (a.as_ref(), b.as_ref()) {
            (Term::Id, _) => b.clone(),
            (_, Term::Id) => a.clone(),
            (_, Term::ZeroE) => b.clone(),
            _ => Arc::new(Term::Compose(a.clone(), b.clone())),
        }
    }

    /// `a ⊕ b`, dropping zeros.
    pub fn plus(a: &TermRef, b: &TermRef) -> TermRef {
        match (a.as_ref(), b.as_ref()) {
            (Term::ZeroE, _) => b.clone(),
            (_, Term::ZeroE) => a.clone(),
            _ => Arc::new(Term::Plus(a.clone(), b.clone())),
        }
    }

    pub fn children(&self) -> Vec<&TermRef> {
        match self {
            Term::ConstV(_)
            | Term::Lookup(_)
            | Term::CmpValue { .. }
            | Term::Id
            | Term::CmpEffect { .. }
            | Term::ZeroE
            | Term::TdEc(_)
            | Term::CmpEnergy { .. }
            | Term::Subst(..)
            | Term::Rec(..) => vec![],
            Term::BinOpV(_, a, b) | Term::Split(a, b) | Term::Plus(a, b) | Term::Compose(a, b) => vec![a, b],
            Term::ConstructV { fields, .. } => fields.iter().map(|(_, t)| t).collect(),
            Term::FieldV(t, _) | Term::Block(t) => vec![t],
            Term::Declare { value, state, .. } | Term::Update { value, state, .. } | Term::DeclareGlobal { value, state, .. } => {
                vec![value, state]
            }
            Term::Scope { args, .. } => args.iter().flat_map(|(v, s)| [v, s]).collect(),
            Term::LoopState { cond_v, cond_s, body_s } => vec![cond_v, cond_s, body_s],
            Term::RepeatState { count_v, count_s, body_s } => vec![count_v, count_s, body_s],
            Term::LoopEnergy { cond_v, cond_s, cond_e, body_s, body_e } => vec![cond_v, cond_s, cond_e, body_s, body_e],
            Term::RepeatEnergy { count_v, count_s, body_s, body_e } => vec![count_v, count_s, body_s, body_e],
            Term::Cond { cond_v, cond_s, then, otherwise } => vec![cond_v, cond_s, then, otherwise],
        }
    }

    /// Calls `f` on every distinct node reachable from `root`, once each.
    pub fn walk(root: &TermRef, mut f: impl FnMut(&Term)) {
        let mut seen: HashSet<*const Term> = HashSet::new();
        let mut stack = vec![root];
        while let Some(t) = stack.pop() {
            if seen.insert(Arc::as_ptr(t)) {
                f(t);
                stack.extend(t.children());
            }
        }
    }

    /// Number of distinct nodes (shared subterms counted once).
    pub fn size(root: &TermRef) -> usize {
        let mut n = 0;
        Term::walk(root, |_| n += 1);
        n
    }

    /// Names appearing in `Rec` nodes reachable from `root`.
    pub fn rec_targets(root: &TermRef) -> Vec<(TermKind, String)> {
        let mut out = Vec::new();
        Term::walk(root, |t| {
            if let Term::Rec(k, f) = t {
                out.push((*k, f.clone()));
            }
        });
        out.sort();
        out.dedup();
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_symbolic(self))
    }
}
