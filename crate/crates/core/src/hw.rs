//! Finite-state hardware component models.
//!
//! A [`ComponentModel`] assigns a constant power draw to every state and
//! attaches an incidental energy to every transition. Each transition belongs
//! to a component function; calling the function fires the first transition
//! (in declaration order) whose source is the current state and whose guard
//! holds for the call's arguments.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use serde::Deserialize;
use thiserror::Error;

use crate::quantity::{parse_rational, Duration, Energy, Power, RationalParseError};
use crate::syntax::{tokenize, BinOp, Token, TokenKind, Type};
use crate::types::{ComponentFunctionSignature, ComponentSignature};
use crate::value::Value;

/// Current state of every component, keyed by component name (Γ).
pub type ComponentStates = BTreeMap<String, String>;

/// Predicate over int and bool parameters of a component function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardExpr {
    Bool(bool),
    Int(BigInt),
    Param(String),
    Op(BinOp, Box<GuardExpr>, Box<GuardExpr>),
}

#[derive(Debug, Clone)]
pub struct Guard {
    pub source: String,
    pub expr: GuardExpr,
}

// Guards are equal when they parse to the same tree, whatever the spacing.
impl PartialEq for Guard {
    fn eq(&self, other: &Guard) -> bool {
        self.expr == other.expr
    }
}

impl Eq for Guard {}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct GuardSyntaxError {
    pub column: u32,
    pub message: String,
}

impl Guard {
    pub fn parse(source: &str) -> Result<Guard, GuardSyntaxError> {
        let tokens = tokenize(source)
            .map_err(|e| GuardSyntaxError { column: e.span.column, message: format!("unexpected character `{}`", e.found) })?;
        let mut p = GuardParser { tokens: &tokens, pos: 0 };
        let expr = p.or()?;
        if let Some(t) = p.peek() {
            return Err(p.error(t, "end of guard"));
        }
        Ok(Guard { source: source.trim().to_string(), expr })
    }

    /// Type of the guard under the given parameter types, or a description of
    /// the first problem.
    pub fn type_of(&self, params: &[(String, Type)]) -> Result<Type, String> {
        guard_type(&self.expr, params)
    }

    /// Parameter names the guard mentions.
    pub fn params(&self) -> BTreeSet<&str> {
        fn walk<'g>(e: &'g GuardExpr, out: &mut BTreeSet<&'g str>) {
            match e {
                GuardExpr::Param(p) => {
                    out.insert(p);
                }
                GuardExpr::Op(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.expr, &mut out);
        out
    }

    pub fn holds(&self, args: &[(String, Value)]) -> Result<bool, String> {
        match guard_eval(&self.expr, args)? {
            Value::Bool(b) => Ok(b),
            other => Err(format!("guard evaluated to {other}")),
        }
    }
}

struct GuardParser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl GuardParser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn error(&self, found: &Token, expected: &str) -> GuardSyntaxError {
        GuardSyntaxError { column: found.span.column, message: format!("expected {expected}, found `{}`", found.text) }
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek().is_some_and(|t| t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        let mut lhs = self.and()?;
        while self.eat(TokenKind::Or) {
            lhs = GuardExpr::Op(BinOp::Or, Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        let mut lhs = self.comparison()?;
        while self.eat(TokenKind::And) {
            lhs = GuardExpr::Op(BinOp::And, Box::new(lhs), Box::new(self.comparison()?));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        let lhs = self.atom()?;
        let op = match self.peek().map(|t| t.kind) {
            Some(TokenKind::Gt) => BinOp::Gt,
            Some(TokenKind::Ge) => BinOp::Ge,
            Some(TokenKind::EqEq) => BinOp::Eq,
            Some(TokenKind::Ne) => BinOp::Ne,
            Some(TokenKind::Le) => BinOp::Le,
            Some(TokenKind::Lt) => BinOp::Lt,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        Ok(GuardExpr::Op(op, Box::new(lhs), Box::new(self.atom()?)))
    }

    fn atom(&mut self) -> Result<GuardExpr, GuardSyntaxError> {
        let Some(t) = self.peek().cloned() else {
            return Err(GuardSyntaxError { column: 0, message: "unexpected end of guard".into() });
        };
        self.pos += 1;
        match t.kind {
            TokenKind::True => Ok(GuardExpr::Bool(true)),
            TokenKind::False => Ok(GuardExpr::Bool(false)),
            TokenKind::IntLit => Ok(GuardExpr::Int(t.text.parse().expect("lexer yields digits"))),
            TokenKind::Minus => match self.peek().cloned() {
                Some(n) if n.kind == TokenKind::IntLit => {
                    self.pos += 1;
                    Ok(GuardExpr::Int(-n.text.parse::<BigInt>().expect("lexer yields digits")))
                }
                Some(other) => Err(self.error(&other, "integer literal")),
                None => Err(GuardSyntaxError { column: t.span.column, message: "dangling `-`".into() }),
            },
            TokenKind::Ident => Ok(GuardExpr::Param(t.text)),
            TokenKind::LParen => {
                let inner = self.or()?;
                match self.peek().cloned() {
                    Some(close) if close.kind == TokenKind::RParen => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(other) => Err(self.error(&other, "`)`")),
                    None => Err(GuardSyntaxError { column: t.span.column, message: "unclosed `(`".into() }),
                }
            }
            TokenKind::FloatLit => {
                Err(GuardSyntaxError { column: t.span.column, message: "float literals are not allowed in guards".into() })
            }
            _ => Err(self.error(&t, "literal, parameter or `(`")),
        }
    }
}

fn guard_type(e: &GuardExpr, params: &[(String, Type)]) -> Result<Type, String> {
    match e {
        GuardExpr::Bool(_) => Ok(Type::Bool),
        GuardExpr::Int(_) => Ok(Type::Int),
        GuardExpr::Param(p) => match params.iter().find(|(n, _)| n == p) {
            None => Err(format!("unknown parameter `{p}`")),
            Some((_, Type::Float)) => Err(format!("float parameter `{p}` cannot appear in a guard")),
            Some((_, ty)) => Ok(ty.clone()),
        },
        GuardExpr::Op(op, a, b) => {
            let (ta, tb) = (guard_type(a, params)?, guard_type(b, params)?);
            if ta != tb {
                return Err(format!("operands of `{op}` have types {ta} and {tb}"));
            }
            let ok = match op {
                BinOp::And | BinOp::Or => ta == Type::Bool,
                BinOp::Eq | BinOp::Ne => true,
                _ => ta == Type::Int,
            };
            if ok {
                Ok(Type::Bool)
            } else {
                Err(format!("`{op}` cannot be applied to {ta}"))
            }
        }
    }
}

fn guard_eval(e: &GuardExpr, args: &[(String, Value)]) -> Result<Value, String> {
    Ok(match e {
        GuardExpr::Bool(b) => Value::Bool(*b),
        GuardExpr::Int(n) => Value::Int(n.clone()),
        GuardExpr::Param(p) => {
            args.iter().find(|(n, _)| n == p).map(|(_, v)| v.clone()).ok_or_else(|| format!("unknown parameter `{p}`"))?
        }
        GuardExpr::Op(op, a, b) => {
            let (a, b) = (guard_eval(a, args)?, guard_eval(b, args)?);
            crate::value::apply_binop(*op, &a, &b).map_err(|e| e.to_string())?
        }
    })
}

/// What a transition hands back to the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReturnSpec {
    Literal(Value),
    /// Echo the named parameter.
    Param(String),
}

impl fmt::Display for ReturnSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReturnSpec::Literal(v) => write!(f, "{v}"),
            ReturnSpec::Param(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: String,
    pub guard: Option<Guard>,
    pub to: String,
    pub energy: Energy,
    pub returns: Option<ReturnSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentFunction {
    pub params: Vec<(String, Type)>,
    pub returns: Type,
    pub time: Duration,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentModel {
    pub name: String,
    pub initial: String,
    /// Power draw per state; the keys are the model's states.
    pub power: BTreeMap<String, Power>,
    pub functions: BTreeMap<String, ComponentFunction>,
}

/// Result of firing one transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub from: String,
    pub to: String,
    pub energy: Energy,
    pub duration: Duration,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("component `{component}` has no function `{function}`")]
    UnknownFunction { component: String, function: String },
    #[error("component `{component}` has no state `{state}`")]
    UnknownState { component: String, state: String },
    #[error("{component}::{function}: {message}")]
    Arguments { component: String, function: String, message: String },
    #[error("no matching transition for {component}::{function} in state `{state}`")]
    NoMatchingTransition { component: String, function: String, state: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhiError {
    #[error("no state given for component `{0}`")]
    MissingComponent(String),
    #[error("state given for unknown component `{0}`")]
    UnknownComponent(String),
    #[error("component `{component}` has no state `{state}`")]
    UnknownState { component: String, state: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
    #[error("model declares no states")]
    NoStates,
    #[error("{context} refers to unknown state `{state}`")]
    UnknownState { context: String, state: String },
    #[error("{what} is negative ({value})")]
    NegativeQuantity { what: String, value: String },
    #[error("{what}: {error}")]
    InvalidQuantity { what: String, error: RationalParseError },
    #[error("{context}: unsupported type `{ty}`")]
    InvalidType { context: String, ty: String },
    #[error("function `{function}`: guard `{guard}`: {message}")]
    Guard { function: String, guard: String, message: String },
    #[error("function `{function}`: duplicate transitions from `{from}` with {}", .guard.as_deref().map_or("no guard".to_string(), |g| format!("guard `{g}`")))]
    DuplicateTransition { function: String, from: String, guard: Option<String> },
    #[error("function `{function}`: transition from `{from}` needs a return value")]
    MissingReturn { function: String, from: String },
    #[error("function `{function}`: {message}")]
    Return { function: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelWarning {
    /// The state has outgoing transitions, but none for this function.
    PartialFunction { state: String, function: String },
    /// No function leaves the state.
    DeadEnd { state: String },
    Unreachable { state: String },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::PartialFunction { state, function } => {
                write!(f, "function `{function}` has no transition from state `{state}`")
            }
            ModelWarning::DeadEnd { state } => write!(f, "state `{state}` has no outgoing transitions"),
            ModelWarning::Unreachable { state } => write!(f, "state `{state}` is unreachable from the initial state"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Validation {
    pub errors: Vec<ModelError>,
    pub warnings: Vec<ModelWarning>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && tokenize(s).is_ok_and(|t| t.len() == 1 && t[0].kind == TokenKind::Ident)
}

impl ComponentModel {
    pub fn states(&self) -> impl Iterator<Item = &str> {
        self.power.keys().map(String::as_str)
    }

    pub fn has_state(&self, state: &str) -> bool {
        self.power.contains_key(state)
    }

    pub fn power_draw(&self, state: &str) -> Result<&Power, StepError> {
        self.power
            .get(state)
            .ok_or_else(|| StepError::UnknownState { component: self.name.clone(), state: state.to_string() })
    }

    pub fn signature(&self) -> ComponentSignature {
        ComponentSignature {
            name: self.name.clone(),
            functions: self
                .functions
                .iter()
                .map(|(name, f)| {
                    let sig = ComponentFunctionSignature {
                        params: f.params.iter().map(|(_, t)| t.clone()).collect(),
                        returns: f.returns.clone(),
                    };
                    (name.clone(), sig)
                })
                .collect(),
        }
    }

    /// The same model with every power label multiplied by `factor`.
    pub fn scale_power(&self, factor: &num_rational::BigRational) -> ComponentModel {
        let mut scaled = self.clone();
        for p in scaled.power.values_mut() {
            *p = p.scale(factor);
        }
        scaled
    }

    pub fn step(&self, state: &str, function: &str, args: &[Value]) -> Result<StepOutcome, StepError> {
        let f = self.functions.get(function).ok_or_else(|| StepError::UnknownFunction {
            component: self.name.clone(),
            function: function.to_string(),
        })?;
        let arg_error = |message: String| StepError::Arguments {
            component: self.name.clone(),
            function: function.to_string(),
            message,
        };
        if args.len() != f.params.len() {
            return Err(arg_error(format!("expected {} argument(s), got {}", f.params.len(), args.len())));
        }
        let bound: Vec<(String, Value)> = f
            .params
            .iter()
            .zip(args)
            .map(|((name, ty), v)| {
                if v.ty() == *ty {
                    Ok((name.clone(), v.clone()))
                } else {
                    Err(arg_error(format!("parameter `{name}` expects {ty}, got {}", v.ty())))
                }
            })
            .collect::<Result<_, _>>()?;
        self.power_draw(state)?;
        for t in f.transitions.iter().filter(|t| t.from == state) {
            if let Some(g) = &t.guard {
                if !g.holds(&bound).map_err(arg_error)? {
                    continue;
                }
            }
            let value = match (&f.returns, &t.returns) {
                (Type::Void, _) => Value::Unit,
                (_, Some(ReturnSpec::Literal(v))) => v.clone(),
                (_, Some(ReturnSpec::Param(p))) => bound
                    .iter()
                    .find(|(n, _)| n == p)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| arg_error(format!("return echoes unknown parameter `{p}`")))?,
                (_, None) => return Err(arg_error(format!("transition from `{state}` has no return value"))),
            };
            return Ok(StepOutcome {
                from: state.to_string(),
                to: t.to.clone(),
                energy: t.energy.clone(),
                duration: f.time.clone(),
                value,
            });
        }
        Err(StepError::NoMatchingTransition {
            component: self.name.clone(),
            function: function.to_string(),
            state: state.to_string(),
        })
    }

    pub fn validate(&self) -> Validation {
        let mut v = Validation::default();
        let err = &mut v.errors;
        if !is_identifier(&self.name) {
            err.push(ModelError::InvalidName(self.name.clone()));
        }
        if self.power.is_empty() {
            err.push(ModelError::NoStates);
        }
        if !self.has_state(&self.initial) {
            err.push(ModelError::UnknownState { context: "initial".into(), state: self.initial.clone() });
        }
        for (state, p) in &self.power {
            if p.is_negative() {
                err.push(ModelError::NegativeQuantity { what: format!("power of state `{state}`"), value: p.to_ratio_string() });
            }
        }
        for (name, f) in &self.functions {
            if !is_identifier(name) {
                err.push(ModelError::InvalidName(name.clone()));
            }
            for (p, ty) in &f.params {
                if !is_identifier(p) {
                    err.push(ModelError::InvalidName(p.clone()));
                }
                if !ty.is_primitive() {
                    err.push(ModelError::InvalidType { context: format!("parameter `{p}` of `{name}`"), ty: ty.to_string() });
                }
            }
            if !(f.returns.is_primitive() || f.returns == Type::Void) {
                err.push(ModelError::InvalidType { context: format!("return type of `{name}`"), ty: f.returns.to_string() });
            }
            if f.time.is_negative() {
                err.push(ModelError::NegativeQuantity { what: format!("time of `{name}`"), value: f.time.to_ratio_string() });
            }
            for (i, t) in f.transitions.iter().enumerate() {
                let context = format!("transition {} of `{name}`", i + 1);
                for s in [&t.from, &t.to] {
                    if !self.has_state(s) {
                        err.push(ModelError::UnknownState { context: context.clone(), state: s.clone() });
                    }
                }
                if t.energy.is_negative() {
                    err.push(ModelError::NegativeQuantity { what: format!("energy of {context}"), value: t.energy.to_ratio_string() });
                }
                if let Some(g) = &t.guard {
                    match g.type_of(&f.params) {
                        Ok(Type::Bool) => {}
                        Ok(other) => err.push(ModelError::Guard {
                            function: name.clone(),
                            guard: g.source.clone(),
                            message: format!("guard has type {other}, expected bool"),
                        }),
                        Err(message) => {
                            err.push(ModelError::Guard { function: name.clone(), guard: g.source.clone(), message })
                        }
                    }
                }
                match (&f.returns, &t.returns) {
                    (Type::Void, None) => {}
                    (Type::Void, Some(r)) => err.push(ModelError::Return {
                        function: name.clone(),
                        message: format!("void function returns `{r}`"),
                    }),
                    (_, None) => err.push(ModelError::MissingReturn { function: name.clone(), from: t.from.clone() }),
                    (ty, Some(ReturnSpec::Literal(lit))) if lit.ty() != *ty => err.push(ModelError::Return {
                        function: name.clone(),
                        message: format!("return value `{lit}` is not of type {ty}"),
                    }),
                    (ty, Some(ReturnSpec::Param(p))) => match f.params.iter().find(|(n, _)| n == p) {
                        Some((_, pt)) if pt == ty => {}
                        Some((_, pt)) => err.push(ModelError::Return {
                            function: name.clone(),
                            message: format!("echoed parameter `{p}` has type {pt}, expected {ty}"),
                        }),
                        None => err.push(ModelError::Return {
                            function: name.clone(),
                            message: format!("return echoes unknown parameter `{p}`"),
                        }),
                    },
                    _ => {}
                }
                for earlier in &f.transitions[..i] {
                    if earlier.from == t.from && earlier.guard == t.guard {
                        err.push(ModelError::DuplicateTransition {
                            function: name.clone(),
                            from: t.from.clone(),
                            guard: t.guard.as_ref().map(|g| g.source.clone()),
                        });
                        break;
                    }
                }
            }
        }

        for state in self.states() {
            let leaving: BTreeSet<&str> = self
                .functions
                .iter()
                .filter(|(_, f)| f.transitions.iter().any(|t| t.from == state))
                .map(|(n, _)| n.as_str())
                .collect();
            if leaving.is_empty() {
                v.warnings.push(ModelWarning::DeadEnd { state: state.to_string() });
                continue;
            }
            for function in self.functions.keys().filter(|f| !leaving.contains(f.as_str())) {
                v.warnings.push(ModelWarning::PartialFunction { state: state.to_string(), function: function.clone() });
            }
        }
        if self.has_state(&self.initial) {
            let mut seen = BTreeSet::from([self.initial.as_str()]);
            let mut queue = VecDeque::from([self.initial.as_str()]);
            while let Some(s) = queue.pop_front() {
                for t in self.functions.values().flat_map(|f| &f.transitions).filter(|t| t.from == s) {
                    if self.has_state(&t.to) && seen.insert(t.to.as_str()) {
                        queue.push_back(t.to.as_str());
                    }
                }
            }
            for state in self.states().filter(|s| !seen.contains(s)) {
                v.warnings.push(ModelWarning::Unreachable { state: state.to_string() });
            }
        }
        v
    }
}

/// Total power draw Φ of a set of components in the given states.
pub fn phi_total<'m>(models: impl IntoIterator<Item = &'m ComponentModel>, gamma: &ComponentStates) -> Result<Power, PhiError> {
    let mut total = Power::zero();
    let mut seen = 0;
    for m in models {
        let state = gamma.get(&m.name).ok_or_else(|| PhiError::MissingComponent(m.name.clone()))?;
        let p = m.power.get(state).ok_or_else(|| PhiError::UnknownState { component: m.name.clone(), state: state.clone() })?;
        if !p.is_zero() {
            total += p;
        }
        seen += 1;
    }
    if seen != gamma.len() {
        // some entry of gamma names a component outside the set
        return Err(PhiError::UnknownComponent(gamma.keys().last().cloned().unwrap_or_default()));
    }
    Ok(total)
}

/// The components available to one analysis, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelSet {
    models: BTreeMap<String, ComponentModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("component `{0}` is defined by more than one model")]
pub struct DuplicateComponent(pub String);

impl ModelSet {
    pub fn new(models: impl IntoIterator<Item = ComponentModel>) -> Result<ModelSet, DuplicateComponent> {
        let mut map = BTreeMap::new();
        for m in models {
            if map.contains_key(&m.name) {
                return Err(DuplicateComponent(m.name));
            }
            map.insert(m.name.clone(), m);
        }
        Ok(ModelSet { models: map })
    }

    pub fn get(&self, name: &str) -> Option<&ComponentModel> {
        self.models.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComponentModel> {
        self.models.values()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn initial_states(&self) -> ComponentStates {
        self.models.values().map(|m| (m.name.clone(), m.initial.clone())).collect()
    }

    pub fn signatures(&self) -> Vec<ComponentSignature> {
        self.models.values().map(ComponentModel::signature).collect()
    }

    pub fn phi(&self, gamma: &ComponentStates) -> Result<Power, PhiError> {
        phi_total(self.models.values(), gamma)
    }

    /// Power draw of each component in its current state.
    pub fn draws(&self, gamma: &ComponentStates) -> Result<Vec<(&str, &Power)>, PhiError> {
        self.models
            .values()
            .map(|m| {
                let state = gamma.get(&m.name).ok_or_else(|| PhiError::MissingComponent(m.name.clone()))?;
                let p = m
                    .power
                    .get(state)
                    .ok_or_else(|| PhiError::UnknownState { component: m.name.clone(), state: state.clone() })?;
                Ok((m.name.as_str(), p))
            })
            .collect()
    }

    pub fn scale_power(&self, factor: &num_rational::BigRational) -> ModelSet {
        ModelSet { models: self.models.iter().map(|(k, m)| (k.clone(), m.scale_power(factor))).collect() }
    }
}

// ---- file format ----

#[derive(Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Text(String),
    Int(i64),
}

impl RawNumber {
    fn text(&self) -> String {
        match self {
            RawNumber::Text(s) => s.clone(),
            RawNumber::Int(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    initial: String,
    states: BTreeMap<String, RawState>,
    #[serde(default)]
    functions: BTreeMap<String, RawFunction>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    power: RawNumber,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    #[serde(default)]
    params: Vec<RawParam>,
    #[serde(default)]
    returns_type: Option<String>,
    #[serde(default)]
    time: Option<RawNumber>,
    #[serde(default)]
    transitions: Vec<RawTransition>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransition {
    from: String,
    #[serde(default)]
    guard: Option<String>,
    to: String,
    energy: RawNumber,
    #[serde(default)]
    returns: Option<toml::Value>,
}

fn parse_type(text: &str) -> Option<Type> {
    match text {
        "void" => Some(Type::Void),
        "bool" => Some(Type::Bool),
        "int" => Some(Type::Int),
        "float" => Some(Type::Float),
        _ => None,
    }
}

/// Converts a byte offset into a 1-based (line, column) pair.
pub(crate) fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub(crate) fn toml_syntax_error(text: &str, e: &toml::de::Error) -> (usize, usize, String) {
    let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
    (line, column, e.message().trim().to_string())
}

/// Reads a model file without semantic validation.
pub fn parse_model(text: &str) -> Result<ComponentModel, Vec<ModelError>> {
    let raw: RawModel = toml::from_str(text).map_err(|e| {
        let (line, column, message) = toml_syntax_error(text, &e);
        vec![ModelError::Syntax { line, column, message }]
    })?;
    let mut errors = Vec::new();
    fn quantity(errors: &mut Vec<ModelError>, what: String, n: &RawNumber) -> Option<num_rational::BigRational> {
        match parse_rational(&n.text()) {
            Ok(r) => Some(r),
            Err(error) => {
                errors.push(ModelError::InvalidQuantity { what, error });
                None
            }
        }
    }

    let mut power = BTreeMap::new();
    for (state, s) in &raw.states {
        if let Some(r) = quantity(&mut errors, format!("power of state `{state}`"), &s.power) {
            power.insert(state.clone(), Power::new(r));
        }
    }
    let mut functions = BTreeMap::new();
    for (name, f) in &raw.functions {
        let time = match &f.time {
            Some(t) => quantity(&mut errors, format!("time of `{name}`"), t).map(Duration::new),
            None => Some(Duration::zero()),
        };
        let mut transitions = Vec::new();
        let mut energies = Vec::new();
        for (i, t) in f.transitions.iter().enumerate() {
            energies.push(quantity(&mut errors, format!("energy of transition {} of `{name}`", i + 1), &t.energy));
        }
        let mut params = Vec::new();
        for p in &f.params {
            match parse_type(&p.ty) {
                Some(ty) => params.push((p.name.clone(), ty)),
                None => errors.push(ModelError::InvalidType { context: format!("parameter `{}` of `{name}`", p.name), ty: p.ty.clone() }),
            }
        }
        let returns = match f.returns_type.as_deref().map(|t| (t, parse_type(t))) {
            None => Type::Void,
            Some((_, Some(ty))) => ty,
            Some((text, None)) => {
                errors.push(ModelError::InvalidType { context: format!("return type of `{name}`"), ty: text.to_string() });
                Type::Void
            }
        };
        for (t, energy) in f.transitions.iter().zip(energies) {
            let guard = match &t.guard {
                None => None,
                Some(src) => match Guard::parse(src) {
                    Ok(g) => Some(g),
                    Err(e) => {
                        errors.push(ModelError::Guard { function: name.clone(), guard: src.clone(), message: e.to_string() });
                        None
                    }
                },
            };
            let ret = match &t.returns {
                None => None,
                Some(toml::Value::Boolean(b)) => Some(ReturnSpec::Literal(Value::Bool(*b))),
                Some(toml::Value::Integer(n)) => Some(ReturnSpec::Literal(Value::int(*n))),
                Some(toml::Value::Float(x)) => Some(ReturnSpec::Literal(Value::Float(*x))),
                Some(toml::Value::String(s)) if params.iter().any(|(p, _)| p == s) => Some(ReturnSpec::Param(s.clone())),
                Some(toml::Value::String(s)) => match Value::parse_as(s, &returns) {
                    Some(v) => Some(ReturnSpec::Literal(v)),
                    None => {
                        errors.push(ModelError::Return {
                            function: name.clone(),
                            message: format!("`{s}` is neither a parameter nor a {returns} literal"),
                        });
                        None
                    }
                },
                Some(other) => {
                    errors.push(ModelError::Return { function: name.clone(), message: format!("unsupported return value `{other}`") });
                    None
                }
            };
            if let Some(energy) = energy {
                transitions.push(Transition {
                    from: t.from.clone(),
                    guard,
                    to: t.to.clone(),
                    energy: Energy::new(energy),
                    returns: ret,
                });
            }
        }
        if let Some(time) = time {
            functions.insert(name.clone(), ComponentFunction { params, returns, time, transitions });
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(ComponentModel { name: raw.name, initial: raw.initial, power, functions })
}

/// Reads and validates a model file. Warnings are available from
/// [`ComponentModel::validate`].
pub fn load_model(text: &str) -> Result<ComponentModel, Vec<ModelError>> {
    let model = parse_model(text)?;
    let validation = model.validate();
    if validation.errors.is_empty() {
        Ok(model)
    } else {
        Err(validation.errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FOUR_STATE: &str = r#"
name = "Dev"
initial = "a"

[states.a]
power = "8"
[states.b]
power = "1"
[states.c]
power = "0"
[states.d]
power = "4"

[functions.start]
time = "0"
transitions = [{ from = "a", to = "b", energy = "4" }]

[functions.work]
transitions = [{ from = "b", to = "b", energy = "8" }]

[functions.pause]
transitions = [{ from = "b", to = "c", energy = "3" }]

[functions.stop]
transitions = [{ from = "c", to = "d", energy = "1" }]

[functions.reset]
transitions = [{ from = "c", to = "a", energy = "10" }]
"#;

    const RADIO: &str = r#"
name = "Radio"
initial = "off"

[states.off]
power = "0"
[states.on]
power = "3/2"

[functions.send]
params = [{ name = "len", type = "int" }, { name = "urgent", type = "bool" }]
returns_type = "int"
time = "0.25"

[[functions.send.transitions]]
from = "on"
guard = "len > 100 or urgent"
to = "on"
energy = "5"
returns = "len"

[[functions.send.transitions]]
from = "on"
to = "on"
energy = "1"
returns = 0

[[functions.send.transitions]]
from = "off"
to = "on"
energy = "2"
returns = -1
"#;

    fn dev4() -> ComponentModel {
        load_model(FOUR_STATE).unwrap()
    }

    fn j(n: i64) -> Energy {
        Energy::from_integer(n)
    }

    #[test]
    fn four_state_loads() {
        let m = dev4();
        assert_eq!(m.initial, "a");
        assert_eq!(m.states().collect::<Vec<_>>(), ["a", "b", "c", "d"]);
        assert_eq!(m.power_draw("a").unwrap(), &Power::from_integer(8));
        assert_eq!(m.power_draw("c").unwrap(), &Power::from_integer(0));
        assert!(matches!(m.power_draw("z"), Err(StepError::UnknownState { .. })));
        let energies: Vec<Energy> = m.functions.values().map(|f| f.transitions[0].energy.clone()).collect();
        let total: Energy = energies.iter().sum();
        assert_eq!(total, j(4 + 8 + 3 + 1 + 10));
    }

    #[test]
    fn four_state_warns_about_dead_end() {
        let v = dev4().validate();
        assert!(v.errors.is_empty());
        assert!(v.warnings.contains(&ModelWarning::DeadEnd { state: "d".into() }));
        assert!(!v.warnings.iter().any(|w| matches!(w, ModelWarning::Unreachable { .. })));
        assert!(v.warnings.contains(&ModelWarning::PartialFunction { state: "a".into(), function: "work".into() }));
    }

    #[test]
    fn four_state_steps() {
        let m = dev4();
        let out = m.step("a", "start", &[]).unwrap();
        assert_eq!((out.to.as_str(), &out.energy, &out.value), ("b", &j(4), &Value::Unit));
        let out = m.step("b", "work", &[]).unwrap();
        assert_eq!((out.to.as_str(), out.energy), ("b", j(8)));
        for f in m.functions.keys() {
            assert!(matches!(m.step("d", f, &[]), Err(StepError::NoMatchingTransition { .. })));
        }
    }

    #[test]
    fn guards_and_returns() {
        let m = load_model(RADIO).unwrap();
        let send = |state: &str, len: i64, urgent: bool| m.step(state, "send", &[Value::int(len), Value::Bool(urgent)]);
        let out = send("on", 200, false).unwrap();
        assert_eq!((out.energy, out.value), (j(5), Value::int(200)));
        assert_eq!(send("on", 5, true).unwrap().value, Value::int(5));
        let out = send("on", 5, false).unwrap();
        assert_eq!((out.energy, out.value), (j(1), Value::int(0)));
        let out = send("off", 5, false).unwrap();
        assert_eq!((out.to.as_str(), out.value, out.duration), ("on", Value::int(-1), Duration::from_ratio(1, 4)));
        assert!(matches!(m.step("on", "send", &[Value::int(1)]), Err(StepError::Arguments { .. })));
        assert!(matches!(m.step("on", "send", &[Value::Bool(true), Value::Bool(true)]), Err(StepError::Arguments { .. })));
    }

    #[test]
    fn step_is_deterministic() {
        let m = load_model(RADIO).unwrap();
        let args = [Value::int(101), Value::Bool(false)];
        assert_eq!(m.step("on", "send", &args), m.step("on", "send", &args));
    }

    #[test]
    fn phi_sums_components() {
        let a = dev4();
        let mut b = dev4();
        b.name = "Other".into();
        let gamma = ComponentStates::from([("Dev".into(), "a".into())]);
        assert_eq!(phi_total([&a], &gamma).unwrap(), Power::from_integer(8));
        let gamma2 = ComponentStates::from([("Dev".into(), "a".into()), ("Other".into(), "d".into())]);
        assert_eq!(phi_total([&a, &b], &gamma2).unwrap(), Power::from_integer(12));
        assert_eq!(phi_total([], &ComponentStates::new()).unwrap(), Power::zero());
        assert_eq!(phi_total([&a, &b], &gamma), Err(PhiError::MissingComponent("Other".into())));
        assert!(matches!(phi_total([&a], &gamma2), Err(PhiError::UnknownComponent(_))));
    }

    fn load_errors(text: &str) -> Vec<ModelError> {
        load_model(text).expect_err("model should be rejected")
    }

    #[test]
    fn rejects_unknown_state() {
        let errs = load_errors(&FOUR_STATE.replace(r#"to = "d""#, r#"to = "e""#));
        assert_eq!(errs, vec![ModelError::UnknownState { context: "transition 1 of `stop`".into(), state: "e".into() }]);
    }

    #[test]
    fn rejects_negative_energy() {
        let errs = load_errors(&FOUR_STATE.replace(r#"energy = "3""#, r#"energy = "-3""#));
        assert!(matches!(&errs[..], [ModelError::NegativeQuantity { .. }]), "{errs:?}");
        let errs = load_errors(&FOUR_STATE.replace(r#"power = "4""#, r#"power = "-1/2""#));
        assert!(matches!(&errs[..], [ModelError::NegativeQuantity { .. }]), "{errs:?}");
    }

    #[test]
    fn rejects_duplicate_transitions() {
        let text = FOUR_STATE.replace(
            r#"transitions = [{ from = "a", to = "b", energy = "4" }]"#,
            r#"transitions = [{ from = "a", to = "b", energy = "4" }, { from = "a", to = "c", energy = "4" }]"#,
        );
        assert!(matches!(&load_errors(&text)[..], [ModelError::DuplicateTransition { guard: None, .. }]));
        let text = RADIO.replace(r#"guard = "len > 100 or urgent""#, r#"guard = "true""#).replace(
            "from = \"on\"\nto = \"on\"\nenergy = \"1\"",
            "from = \"on\"\nguard = \"true\"\nto = \"on\"\nenergy = \"1\"",
        );
        assert!(matches!(&load_errors(&text)[..], [ModelError::DuplicateTransition { guard: Some(_), .. }]));
    }

    #[test]
    fn rejects_bad_guards() {
        let text = FOUR_STATE.replace(
            r#"transitions = [{ from = "a", to = "b", energy = "4" }]"#,
            r#"transitions = [{ from = "a", guard = "arg0 > 0", to = "b", energy = "4" }]"#,
        );
        let errs = load_errors(&text);
        assert!(matches!(&errs[..], [ModelError::Guard { message, .. }] if message.contains("unknown parameter")), "{errs:?}");
        let errs = load_errors(&RADIO.replace("len > 100 or urgent", "len + 1"));
        assert!(matches!(&errs[..], [ModelError::Guard { .. }]), "{errs:?}");
        let errs = load_errors(&RADIO.replace("len > 100 or urgent", "len"));
        assert!(matches!(&errs[..], [ModelError::Guard { message, .. }] if message.contains("expected bool")), "{errs:?}");
        let errs = load_errors(&RADIO.replace("len > 100 or urgent", "len > 1.5"));
        assert!(matches!(&errs[..], [ModelError::Guard { .. }]), "{errs:?}");
        let errs = load_errors(&RADIO.replace("len > 100 or urgent", "urgent > false"));
        assert!(matches!(&errs[..], [ModelError::Guard { .. }]), "{errs:?}");
    }

    #[test]
    fn rejects_bad_returns() {
        let errs = load_errors(&RADIO.replace("returns = 0", "returns = true"));
        assert!(matches!(&errs[..], [ModelError::Return { .. }]), "{errs:?}");
        let errs = load_errors(&RADIO.replace("returns = -1\n", ""));
        assert!(matches!(&errs[..], [ModelError::MissingReturn { .. }]), "{errs:?}");
        let errs = load_errors(&RADIO.replace(r#"returns = "len""#, r#"returns = "urgent""#));
        assert!(matches!(&errs[..], [ModelError::Return { .. }]), "{errs:?}");
    }

    #[test]
    fn reports_syntax_location() {
        let errs = load_errors("name = \"X\"\ninitial = \"a\"\n[states.a]\npower = \n");
        let [ModelError::Syntax { line, .. }] = &errs[..] else { panic!("{errs:?}") };
        assert_eq!(*line, 4);
        assert!(matches!(&load_errors("name = \"X\"\ninitial = \"a\"\nstates = {}\nbogus = 1\n")[..], [ModelError::Syntax { .. }]));
    }

    #[test]
    fn quantities_are_exact() {
        let m = load_model(&FOUR_STATE.replace(r#"power = "1""#, r#"power = "0.123456789""#)).unwrap();
        assert_eq!(m.power_draw("b").unwrap(), &Power::from_ratio(123_456_789, 1_000_000_000));
        let errs = load_errors(&FOUR_STATE.replace(r#"power = "1""#, r#"power = "0.1234567891""#));
        assert!(matches!(&errs[..], [ModelError::InvalidQuantity { .. }]));
    }

    #[test]
    fn unreachable_states_warn() {
        let text = FOUR_STATE.replace(r#"[states.d]"#, "[states.z]\npower = \"0\"\n[states.d]");
        let v = load_model(&text).unwrap().validate();
        assert!(v.warnings.contains(&ModelWarning::Unreachable { state: "z".into() }));
    }

    #[test]
    fn scaling_doubles_power_only() {
        let m = dev4().scale_power(&num_rational::BigRational::from_integer(2.into()));
        assert_eq!(m.power_draw("a").unwrap(), &Power::from_integer(16));
        assert_eq!(m.functions["start"].transitions[0].energy, j(4));
    }

    #[test]
    fn signature_projection() {
        let sig = load_model(RADIO).unwrap().signature();
        assert_eq!(sig.functions["send"].params, vec![Type::Int, Type::Bool]);
        assert_eq!(sig.functions["send"].returns, Type::Int);
    }

    #[test]
    fn guard_parsing() {
        let g = Guard::parse("a > -1 and (b or c == false)").unwrap();
        assert_eq!(g.params().into_iter().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(Guard::parse("a>-1 and (b or c==false)").unwrap(), g);
        assert!(Guard::parse("a >").is_err());
        assert!(Guard::parse("a > 1 b").is_err());
        assert!(Guard::parse("(a").is_err());
    }
}
