//! Renders a [`Program`] back to source text that re-parses to the same tree.
//!
//! Parentheses are inserted only where the parser's precedence levels
//! require them.

use std::fmt::Write;

use super::ast::*;

// Precedence levels, loosest first. Binary operators use `BinOp::precedence`.
const COMMA: u8 = 0;
const SEQ: u8 = 1;
const ASSIGN: u8 = 2;
const POSTFIX: u8 = 8;
const ATOM: u8 = 9;

fn expr_level<A>(e: &Expr<A>) -> u8 {
    match &e.kind {
        ExprKind::Comma(..) => COMMA,
        ExprKind::Decl(..) | ExprKind::Assign(..) => ASSIGN,
        ExprKind::BinOp(op, ..) => op.precedence(),
        ExprKind::Field(..) => POSTFIX,
        _ => ATOM,
    }
}

fn stmt_level<A>(s: &Stmt<A>) -> u8 {
    match &s.kind {
        StmtKind::Seq(..) => SEQ,
        StmtKind::Expr(e) => expr_level(e),
        _ => ATOM,
    }
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    /// Prints `inner` on its own indented lines, followed by a newline at the
    /// current indentation.
    fn block(&mut self, f: impl FnOnce(&mut Self)) {
        self.indent += 1;
        self.newline();
        f(self);
        self.indent -= 1;
        self.newline();
    }

    fn parens(&mut self, needed: bool, f: impl FnOnce(&mut Self)) {
        if needed {
            self.out.push('(');
        }
        f(self);
        if needed {
            self.out.push(')');
        }
    }

    fn args<A>(&mut self, args: &[Expr<A>]) {
        self.out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(a, ASSIGN);
        }
        self.out.push(')');
    }

    fn expr<A>(&mut self, e: &Expr<A>, min: u8) {
        self.parens(expr_level(e) < min, |p| p.expr_inner(e));
    }

    fn expr_inner<A>(&mut self, e: &Expr<A>) {
        match &e.kind {
            ExprKind::Const(l) => {
                let _ = write!(self.out, "{l}");
            }
            ExprKind::Var(x) => self.out.push_str(x),
            ExprKind::BinOp(op, a, b) => {
                let p = op.precedence();
                let (left, right) = if op.is_comparison() { (p + 1, p + 1) } else { (p, p + 1) };
                self.expr(a, left);
                let _ = write!(self.out, " {op} ");
                self.expr(b, right);
            }
            ExprKind::Construct(name, args) | ExprKind::Call(name, args) => {
                self.out.push_str(name);
                self.args(args);
            }
            ExprKind::Field(base, field) => {
                self.expr(base, POSTFIX);
                self.out.push('.');
                self.out.push_str(field);
            }
            ExprKind::Decl(ty, x, init) => {
                let _ = write!(self.out, "{ty} {x} = ");
                self.expr(init, ASSIGN);
            }
            ExprKind::Assign(x, value) => {
                let _ = write!(self.out, "{x} = ");
                self.expr(value, ASSIGN);
            }
            ExprKind::ComponentCall { component, function, args } => {
                let _ = write!(self.out, "{component}::{function}");
                self.args(args);
            }
            ExprKind::Comma(s, value) => {
                self.stmt(s, SEQ);
                self.out.push(',');
                self.newline();
                self.expr(value, COMMA);
            }
        }
    }

    fn stmt<A>(&mut self, s: &Stmt<A>, min: u8) {
        self.parens(stmt_level(s) < min, |p| p.stmt_inner(s));
    }

    fn stmt_inner<A>(&mut self, s: &Stmt<A>) {
        match &s.kind {
            StmtKind::Skip => self.out.push_str("skip"),
            StmtKind::Seq(a, b) => {
                self.stmt(a, ASSIGN);
                self.out.push(';');
                self.newline();
                self.stmt(b, SEQ);
            }
            StmtKind::Expr(e) => self.expr_inner(e),
            StmtKind::If(cond, then, otherwise) => {
                self.out.push_str("if ");
                self.expr(cond, COMMA);
                self.out.push_str(" then");
                self.block(|p| p.stmt(then, COMMA));
                if let Some(otherwise) = otherwise {
                    self.out.push_str("else");
                    self.block(|p| p.stmt(otherwise, COMMA));
                }
                self.out.push_str("end");
            }
            StmtKind::Repeat(head, body) | StmtKind::While(head, body) => {
                let keyword = if matches!(s.kind, StmtKind::Repeat(..)) { "repeat" } else { "while" };
                let _ = write!(self.out, "{keyword} ");
                self.expr(head, COMMA);
                self.out.push_str(" begin");
                self.block(|p| p.stmt(body, COMMA));
                self.out.push_str("end");
            }
        }
    }

    fn function<A>(&mut self, f: &FunDef<A>) {
        let _ = write!(self.out, "{} {}(", f.return_type, f.name);
        for (i, (name, ty)) in f.params.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            let _ = write!(self.out, "{ty} {name}");
        }
        self.out.push_str(") begin");
        self.block(|p| match &f.body.kind {
            // implicit unit result of a statement-bodied void function
            ExprKind::Comma(stmt, unit) if f.return_type == Type::Void && is_unit(unit) => p.stmt(stmt, COMMA),
            _ => p.expr(&f.body, COMMA),
        });
        self.out.push_str("end\n");
    }
}

fn is_unit<A>(e: &Expr<A>) -> bool {
    matches!(e.kind, ExprKind::Const(Literal::Unit))
}

/// Renders a whole program: structs, then globals in order, then functions.
pub fn pretty_print<A>(program: &Program<A>) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    for s in &program.structs {
        let _ = write!(p.out, "struct {} begin", s.name);
        for (field, ty) in &s.fields {
            let _ = write!(p.out, " {ty} {field};");
        }
        p.out.push_str(" end\n");
    }
    for g in &program.globals {
        let _ = write!(p.out, "{} {} = ", g.ty, g.name);
        p.expr(&g.init, ASSIGN);
        p.out.push('\n');
    }
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 || !program.structs.is_empty() || !program.globals.is_empty() {
            p.out.push('\n');
        }
        p.function(f);
    }
    p.out
}

/// Renders a single expression at the loosest precedence level.
pub fn expr_to_string<A>(e: &Expr<A>) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.expr(e, COMMA);
    p.out
}
