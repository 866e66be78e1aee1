//! Static type checking of parsed programs.
//!
//! The checker resolves struct layouts, function signatures, global types and
//! component signatures, and annotates every expression with its type. It
//! keeps going after an error so that one run reports every violation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::*;

/// Parameter and return types of one component function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentFunctionSignature {
    pub params: Vec<Type>,
    pub returns: Type,
}

/// The type-level view of a hardware component: the functions programs may
/// call on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSignature {
    pub name: String,
    pub functions: BTreeMap<String, ComponentFunctionSignature>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSignature {
    pub params: Vec<(String, Type)>,
    pub returns: Type,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TypeError {
    pub span: Span,
    pub message: String,
    pub expected: Option<Type>,
    pub found: Option<Type>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        match (&self.expected, &self.found) {
            (Some(e), Some(x)) => write!(f, " (expected {e}, found {x})"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown struct `{0}`")]
pub struct UnknownStruct(pub String);

/// A program that passed type checking, with every expression annotated.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub program: Program<Type>,
    pub structs: BTreeMap<String, Vec<(String, Type)>>,
    pub functions: BTreeMap<String, FunctionSignature>,
    pub globals: Vec<(String, Type)>,
    pub components: BTreeMap<String, ComponentSignature>,
}

impl TypedProgram {
    pub fn function(&self, name: &str) -> Option<&FunDef<Type>> {
        self.program.function(name)
    }
}

/// Declared field order of struct `name`.
pub fn resolve_struct<'p>(typed: &'p TypedProgram, name: &str) -> Result<&'p [(String, Type)], UnknownStruct> {
    typed.structs.get(name).map(Vec::as_slice).ok_or_else(|| UnknownStruct(name.to_string()))
}

struct Checker<'c> {
    structs: BTreeMap<String, Vec<(String, Type)>>,
    functions: BTreeMap<String, FunctionSignature>,
    components: &'c BTreeMap<String, ComponentSignature>,
    globals: HashMap<String, Type>,
    scopes: Vec<HashMap<String, Type>>,
    errors: Vec<TypeError>,
}

impl Checker<'_> {
    fn error(&mut self, span: Span, message: impl Into<String>) {
        self.errors.push(TypeError { span, message: message.into(), expected: None, found: None });
    }

    fn mismatch(&mut self, span: Span, message: impl Into<String>, expected: &Type, found: &Type) {
        self.errors.push(TypeError {
            span,
            message: message.into(),
            expected: Some(expected.clone()),
            found: Some(found.clone()),
        });
    }

    /// Reports a mismatch unless `found` is unknown (already reported) or equal.
    fn expect(&mut self, span: Span, what: &str, expected: &Type, found: Option<&Type>) {
        if let Some(found) = found {
            if found != expected {
                self.mismatch(span, format!("{what}: expected {expected}"), expected, found);
            }
        }
    }

    fn type_exists(&self, ty: &Type) -> bool {
        match ty {
            Type::Struct(name) => self.structs.contains_key(name),
            _ => true,
        }
    }

    fn check_type(&mut self, ty: &Type, span: Span, what: &str, allow_void: bool) {
        if !self.type_exists(ty) {
            self.error(span, format!("unknown type `{ty}` in {what}"));
        } else if !allow_void && *ty == Type::Void {
            self.error(span, format!("{what} cannot have type void"));
        }
    }

    fn lookup(&self, name: &str) -> Option<&Type> {
        self.scopes.iter().rev().find_map(|s| s.get(name)).or_else(|| self.globals.get(name))
    }

    fn with_scope<T>(&mut self, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scopes.push(HashMap::new());
        let out = f(self);
        self.scopes.pop();
        out
    }

    fn args(&mut self, args: &[Expr]) -> Vec<(Expr<Type>, Option<Type>)> {
        args.iter().map(|a| self.expr(a)).collect()
    }

    fn check_args(&mut self, span: Span, callee: &str, params: &[Type], args: &[(Expr<Type>, Option<Type>)]) {
        if params.len() != args.len() {
            self.error(span, format!("`{callee}` takes {} argument(s) but {} were supplied", params.len(), args.len()));
            return;
        }
        for (i, (param, (arg, ty))) in params.iter().zip(args).enumerate() {
            self.expect(arg.span, &format!("argument {} of `{callee}`", i + 1), param, ty.as_ref());
        }
    }

    fn expr(&mut self, e: &Expr) -> (Expr<Type>, Option<Type>) {
        let (kind, ty) = match &e.kind {
            ExprKind::Const(l) => {
                let ty = match l {
                    Literal::Unit => Type::Void,
                    Literal::Bool(_) => Type::Bool,
                    Literal::Int(_) => Type::Int,
                    Literal::Float(_) => Type::Float,
                };
                (ExprKind::Const(l.clone()), Some(ty))
            }
            ExprKind::Var(x) => {
                let ty = self.lookup(x).cloned();
                if ty.is_none() {
                    self.error(e.span, format!("unknown variable `{x}`"));
                }
                (ExprKind::Var(x.clone()), ty)
            }
            ExprKind::BinOp(op, a, b) => {
                let (a, ta) = self.expr(a);
                let (b, tb) = self.expr(b);
                let ty = self.binop(*op, e.span, ta, tb, b.span);
                (ExprKind::BinOp(*op, Box::new(a), Box::new(b)), ty)
            }
            ExprKind::Construct(name, args) => {
                let args = self.args(args);
                let fields = self.structs.get(name).cloned();
                let ty = match fields {
                    Some(fields) => {
                        let params: Vec<Type> = fields.into_iter().map(|(_, t)| t).collect();
                        self.check_args(e.span, name, &params, &args);
                        Some(Type::Struct(name.clone()))
                    }
                    None => {
                        self.error(e.span, format!("unknown struct `{name}`"));
                        None
                    }
                };
                (ExprKind::Construct(name.clone(), args.into_iter().map(|(a, _)| a).collect()), ty)
            }
            ExprKind::Field(base, field) => {
                let (base, tb) = self.expr(base);
                let ty = match &tb {
                    Some(Type::Struct(s)) => {
                        let found = self.structs.get(s).and_then(|fs| fs.iter().find(|(f, _)| f == field));
                        match found {
                            Some((_, t)) => Some(t.clone()),
                            None => {
                                self.error(e.span, format!("struct `{s}` has no field `{field}`"));
                                None
                            }
                        }
                    }
                    Some(other) => {
                        self.error(e.span, format!("field access `.{field}` on non-struct type {other}"));
                        None
                    }
                    None => None,
                };
                (ExprKind::Field(Box::new(base), field.clone()), ty)
            }
            ExprKind::Decl(ty, x, init) => {
                let (init, ti) = self.expr(init);
                self.check_type(ty, e.span, &format!("declaration of `{x}`"), false);
                self.expect(init.span, &format!("initializer of `{x}`"), ty, ti.as_ref());
                let frame = self.scopes.last_mut().expect("declarations are checked inside a scope");
                if frame.contains_key(x) {
                    self.error(e.span, format!("`{x}` is already declared in this scope"));
                } else {
                    frame.insert(x.clone(), ty.clone());
                }
                (ExprKind::Decl(ty.clone(), x.clone(), Box::new(init)), Some(ty.clone()))
            }
            ExprKind::Assign(x, value) => {
                let (value, tv) = self.expr(value);
                let target = self.lookup(x).cloned();
                match &target {
                    Some(t) => self.expect(value.span, &format!("assignment to `{x}`"), t, tv.as_ref()),
                    None => self.error(e.span, format!("assignment to undeclared variable `{x}`")),
                }
                (ExprKind::Assign(x.clone(), Box::new(value)), target)
            }
            ExprKind::ComponentCall { component, function, args } => {
                let args = self.args(args);
                let sig = self.components.get(component).map(|c| c.functions.get(function));
                let ty = match sig {
                    None => {
                        self.error(e.span, format!("unknown component `{component}`"));
                        None
                    }
                    Some(None) => {
                        self.error(e.span, format!("component `{component}` has no function `{function}`"));
                        None
                    }
                    Some(Some(sig)) => {
                        let sig = sig.clone();
                        self.check_args(e.span, &format!("{component}::{function}"), &sig.params, &args);
                        Some(sig.returns)
                    }
                };
                let args = args.into_iter().map(|(a, _)| a).collect();
                (ExprKind::ComponentCall { component: component.clone(), function: function.clone(), args }, ty)
            }
            ExprKind::Call(name, args) => {
                let args = self.args(args);
                let ty = match self.functions.get(name).cloned() {
                    Some(sig) => {
                        let params: Vec<Type> = sig.params.into_iter().map(|(_, t)| t).collect();
                        self.check_args(e.span, name, &params, &args);
                        Some(sig.returns)
                    }
                    None => {
                        self.error(e.span, format!("unknown function `{name}`"));
                        None
                    }
                };
                (ExprKind::Call(name.clone(), args.into_iter().map(|(a, _)| a).collect()), ty)
            }
            ExprKind::Comma(s, value) => {
                let s = self.stmt(s);
                let (value, ty) = self.expr(value);
                (ExprKind::Comma(Box::new(s), Box::new(value)), ty)
            }
        };
        let ann = ty.clone().unwrap_or(Type::Void);
        (Expr { kind, span: e.span, ann }, ty)
    }

    fn binop(&mut self, op: BinOp, span: Span, ta: Option<Type>, tb: Option<Type>, rhs_span: Span) -> Option<Type> {
        let result = |operand: &Type| if op.is_comparison() { Type::Bool } else { operand.clone() };
        let allowed = |t: &Type| {
            if op.is_logical() {
                *t == Type::Bool
            } else if op.is_arithmetic() || !matches!(op, BinOp::Eq | BinOp::Ne) {
                matches!(t, Type::Int | Type::Float)
            } else {
                t.is_primitive()
            }
        };
        let default_operand = if op.is_logical() { Type::Bool } else { Type::Int };
        match (ta, tb) {
            (Some(a), b) if !allowed(&a) => {
                self.mismatch(span, format!("invalid left operand for `{op}`"), &default_operand, &a);
                b.is_some().then(|| result(&default_operand))
            }
            (Some(a), Some(b)) => {
                if a != b {
                    self.mismatch(rhs_span, format!("operands of `{op}` must have the same type"), &a, &b);
                }
                Some(result(&a))
            }
            (None, Some(b)) if !allowed(&b) => {
                self.mismatch(rhs_span, format!("invalid right operand for `{op}`"), &default_operand, &b);
                None
            }
            _ => None,
        }
    }

    fn cond(&mut self, c: &Expr, what: &str, expected: Type) -> Expr<Type> {
        let (c, tc) = self.expr(c);
        self.expect(c.span, what, &expected, tc.as_ref());
        c
    }

    fn stmt(&mut self, s: &Stmt) -> Stmt<Type> {
        let kind = match &s.kind {
            StmtKind::Skip => StmtKind::Skip,
            StmtKind::Seq(a, b) => {
                let a = self.stmt(a);
                let b = self.stmt(b);
                StmtKind::Seq(Box::new(a), Box::new(b))
            }
            StmtKind::Expr(e) => StmtKind::Expr(self.expr(e).0),
            StmtKind::If(c, t, e) => {
                let c = self.cond(c, "if condition", Type::Bool);
                let t = self.with_scope(|me| me.stmt(t));
                let e = e.as_ref().map(|e| Box::new(self.with_scope(|me| me.stmt(e))));
                StmtKind::If(c, Box::new(t), e)
            }
            StmtKind::Repeat(n, b) => {
                let n = self.cond(n, "repeat count", Type::Int);
                let b = self.with_scope(|me| me.stmt(b));
                StmtKind::Repeat(n, Box::new(b))
            }
            StmtKind::While(c, b) => {
                let c = self.cond(c, "while condition", Type::Bool);
                let b = self.with_scope(|me| me.stmt(b));
                StmtKind::While(c, Box::new(b))
            }
        };
        Stmt { kind, span: s.span }
    }

    fn collect_structs(&mut self, program: &Program) {
        for s in &program.structs {
            if self.structs.contains_key(&s.name) {
                self.error(s.span, format!("struct `{}` is defined more than once", s.name));
                continue;
            }
            self.structs.insert(s.name.clone(), s.fields.clone());
        }
        for s in &program.structs {
            let mut seen = HashSet::new();
            for (field, ty) in &s.fields {
                if !seen.insert(field) {
                    self.error(s.span, format!("duplicate field `{field}` in struct `{}`", s.name));
                }
                self.check_type(ty, s.span, &format!("field `{}.{field}`", s.name), false);
            }
        }
        // by-value self containment would need infinite size
        for s in &program.structs {
            if self.contains_struct(&s.name, &s.name, &mut HashSet::new()) {
                self.error(s.span, format!("struct `{}` contains itself by value", s.name));
            }
        }
    }

    fn contains_struct(&self, outer: &str, target: &str, visited: &mut HashSet<String>) -> bool {
        if !visited.insert(outer.to_string()) {
            return false;
        }
        let Some(fields) = self.structs.get(outer) else { return false };
        fields.iter().any(|(_, ty)| match ty {
            Type::Struct(inner) => inner == target || self.contains_struct(inner, target, visited),
            _ => false,
        })
    }

    fn collect_functions(&mut self, program: &Program) {
        for f in &program.functions {
            if self.functions.contains_key(&f.name) {
                self.error(f.span, format!("function `{}` is defined more than once", f.name));
                continue;
            }
            self.check_type(&f.return_type, f.span, &format!("return type of `{}`", f.name), true);
            let mut seen = HashSet::new();
            for (param, ty) in &f.params {
                if !seen.insert(param) {
                    self.error(f.span, format!("duplicate parameter `{param}` in `{}`", f.name));
                }
                self.check_type(ty, f.span, &format!("parameter `{param}`"), false);
            }
            self.functions.insert(
                f.name.clone(),
                FunctionSignature { params: f.params.clone(), returns: f.return_type.clone() },
            );
        }
    }

    fn check_components(&mut self) {
        for c in self.components.values() {
            for (name, sig) in &c.functions {
                let bad_param = sig.params.iter().any(|t| !t.is_primitive());
                let bad_return = !(sig.returns.is_primitive() || sig.returns == Type::Void);
                if bad_param || bad_return {
                    self.errors.push(TypeError {
                        span: Span::default(),
                        message: format!("component function `{}::{name}` must use bool, int or float", c.name),
                        expected: None,
                        found: None,
                    });
                }
            }
        }
    }
}

/// Type checks `program` against the given component signatures.
pub fn check(program: &Program, components: &[ComponentSignature]) -> Result<TypedProgram, Vec<TypeError>> {
    let component_map: BTreeMap<String, ComponentSignature> =
        components.iter().map(|c| (c.name.clone(), c.clone())).collect();
    let mut ck = Checker {
        structs: BTreeMap::new(),
        functions: BTreeMap::new(),
        components: &component_map,
        globals: HashMap::new(),
        scopes: Vec::new(),
        errors: Vec::new(),
    };
    ck.check_components();
    ck.collect_structs(program);
    ck.collect_functions(program);

    // Globals see only the globals declared before them.
    let mut globals = Vec::new();
    let mut typed_globals = Vec::new();
    for g in &program.globals {
        let (init, ti) = ck.with_scope(|me| me.expr(&g.init));
        ck.check_type(&g.ty, g.span, &format!("global `{}`", g.name), false);
        ck.expect(init.span, &format!("initializer of global `{}`", g.name), &g.ty, ti.as_ref());
        if ck.globals.contains_key(&g.name) {
            ck.error(g.span, format!("global `{}` is defined more than once", g.name));
        } else {
            ck.globals.insert(g.name.clone(), g.ty.clone());
            globals.push((g.name.clone(), g.ty.clone()));
        }
        typed_globals.push(GlobalDef { ty: g.ty.clone(), name: g.name.clone(), init, span: g.span });
    }

    let mut typed_functions = Vec::new();
    for f in &program.functions {
        ck.scopes.push(f.params.iter().cloned().collect());
        let (body, tb) = ck.expr(&f.body);
        ck.scopes.pop();
        if f.return_type != Type::Void {
            ck.expect(body.span, &format!("body of `{}`", f.name), &f.return_type, tb.as_ref());
        }
        typed_functions.push(FunDef {
            return_type: f.return_type.clone(),
            name: f.name.clone(),
            params: f.params.clone(),
            body,
            span: f.span,
        });
    }

    if !ck.errors.is_empty() {
        return Err(ck.errors);
    }
    Ok(TypedProgram {
        program: Program { structs: program.structs.clone(), functions: typed_functions, globals: typed_globals },
        structs: ck.structs,
        functions: ck.functions,
        globals,
        components: component_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(name: &str, fns: &[(&str, Vec<Type>, Type)]) -> ComponentSignature {
        ComponentSignature {
            name: name.into(),
            functions: fns
                .iter()
                .map(|(f, p, r)| (f.to_string(), ComponentFunctionSignature { params: p.clone(), returns: r.clone() }))
                .collect(),
        }
    }

    fn dev() -> Vec<ComponentSignature> {
        vec![sig("Dev", &[("start", vec![], Type::Void), ("send", vec![Type::Int], Type::Int)])]
    }

    fn errors(src: &str) -> Vec<TypeError> {
        check(&parse_source(src).unwrap(), &dev()).expect_err("expected type errors")
    }

    fn ok(src: &str) -> TypedProgram {
        check(&parse_source(src).unwrap(), &dev()).unwrap_or_else(|e| panic!("{e:?}"))
    }

    #[test]
    fn struct_condition_rejected() {
        let errs = errors("struct P begin int x; end void main() begin if P(1) then skip end end");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("expected bool"), "{}", errs[0]);
        assert_eq!(errs[0].expected, Some(Type::Bool));
        assert_eq!(errs[0].found, Some(Type::Struct("P".into())));
        assert_eq!(errs[0].span.line, 1);
    }

    #[test]
    fn int_plus_bool_rejected() {
        let errs = errors("int main() begin 1 + true end");
        assert_eq!(errs.len(), 1);
        assert_eq!((errs[0].expected.clone(), errs[0].found.clone()), (Some(Type::Int), Some(Type::Bool)));
    }

    #[test]
    fn reports_all_errors() {
        let errs = errors("int main() begin x = 1.5; y = true, 1 + false end");
        assert_eq!(errs.len(), 3, "{errs:?}");
    }

    #[test]
    fn every_expression_gets_a_type() {
        let typed = ok("int g = 2 float main(int n) begin float f = 1.5, if n > g then f = f * 2.0 end, f end");
        let body = &typed.function("main").unwrap().body;
        assert_eq!(body.ann, Type::Float);
        let ExprKind::Comma(_, rest) = &body.kind else { panic!() };
        assert_eq!(rest.ann, Type::Float);
    }

    #[test]
    fn locals_shadow_globals() {
        let typed = ok("bool x = true int main() begin int x = 3, x + 1 end");
        assert_eq!(typed.function("main").unwrap().body.ann, Type::Int);
    }

    #[test]
    fn erasure_returns_input() {
        let program = parse_source("struct P begin int x; end int main(int a) begin P p = P(a), p.x + Dev::send(a) end")
            .unwrap();
        let typed = check(&program, &dev()).unwrap();
        assert_eq!(typed.program.erase(), program);
    }

    #[test]
    fn component_checks() {
        let errs = errors("void main() begin Dev::send(1, 2) end");
        assert!(errs[0].message.contains("takes 1 argument"), "{}", errs[0]);
        let errs = errors("struct P begin int x; end void main() begin Dev::send(P(1)) end");
        assert_eq!(errs[0].found, Some(Type::Struct("P".into())));
        let errs = errors("void main() begin Other::f() end");
        assert!(errs[0].message.contains("unknown component"));
        let errs = errors("void main() begin Dev::stop() end");
        assert!(errs[0].message.contains("no function"));
    }

    #[test]
    fn struct_definition_checks() {
        assert_eq!(errors("struct A begin A inner; end void main() begin skip end").len(), 1);
        assert_eq!(errors("struct A begin B b; end struct B begin A a; end void main() begin skip end").len(), 2);
        assert_eq!(errors("struct A begin int x; bool x; end void main() begin skip end").len(), 1);
        assert_eq!(errors("struct A begin void x; end void main() begin skip end").len(), 1);
    }

    #[test]
    fn redeclaration_in_same_scope_only() {
        assert_eq!(errors("int main() begin int a = 1; int a = 2, a end").len(), 1);
        assert_eq!(errors("int main(int a) begin int a = 2, a end").len(), 1);
        ok("int main() begin int a = 1; if true then int a = 2 end, a end");
    }

    #[test]
    fn block_declarations_do_not_escape() {
        let errs = errors("int main() begin if true then int a = 2 end, a end");
        assert!(errs[0].message.contains("unknown variable `a`"));
    }

    #[test]
    fn globals_see_only_earlier_globals() {
        let errs = errors("int a = b int b = 1 void main() begin skip end");
        assert!(errs[0].message.contains("unknown variable `b`"));
        ok("int a = 1 int b = a + 1 void main() begin skip end");
    }

    #[test]
    fn forward_and_recursive_calls() {
        ok("int f(int n) begin g(n) end int g(int n) begin f(n - 1) end void main() begin skip end");
    }

    #[test]
    fn condition_types() {
        assert_eq!(errors("void main() begin repeat true begin skip end end").len(), 1);
        assert_eq!(errors("void main() begin while 1 begin skip end end").len(), 1);
        assert_eq!(errors("bool main() begin 1 < 2.0 end").len(), 1);
        assert_eq!(errors("bool main() begin true < false end").len(), 1);
        ok("bool main() begin true == false and 1.0 != 2.0 end");
    }

    #[test]
    fn resolve_struct_layout() {
        let typed = ok("struct Point begin int x; int y; end struct Seg begin Point a; Point b; end void main() begin skip end");
        assert_eq!(resolve_struct(&typed, "Point").unwrap(), &[("x".into(), Type::Int), ("y".into(), Type::Int)]);
        assert_eq!(resolve_struct(&typed, "Seg").unwrap()[0].1, Type::Struct("Point".into()));
        assert_eq!(resolve_struct(&typed, "Nope"), Err(UnknownStruct("Nope".into())));
    }
}
