//! Predictive recursive-descent parser.
//!
//! Parsing runs in two phases. The first phase never looks more than two
//! tokens ahead and builds a single tree in which statements and expressions
//! are not yet distinguished ([`Node`]). The second phase walks that tree,
//! classifying each node as a [`Stmt`] or an [`Expr`] depending on the
//! position it occupies, and resolves `Name(args)` to either a struct
//! construction or a function call.
//!
//! Binary operator precedence, from loosest to tightest: `or`, `and`,
//! comparisons (non-associative), `+`/`-`, `*`. Everything is
//! left-associative. Assignments and declarations bind looser than every
//! binary operator, `;` looser still, and the comma expression loosest.

use std::collections::HashSet;

use num_bigint::BigInt;
use thiserror::Error;

use super::ast::*;
use super::lexer::{tokenize, LexError, Token, TokenKind};

/// The parser inspects at most this many tokens beyond the current position.
pub const MAX_LOOKAHEAD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: expected {}, found {found}", expected.join(" or "))]
    Unexpected { span: Span, expected: Vec<String>, found: String },
    #[error("{span}: {message}")]
    Classification { span: Span, message: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Unexpected { span, .. } | ParseError::Classification { span, .. } => *span,
        }
    }
}

/// Any failure turning source text into a [`Program`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> Span {
        match self {
            SyntaxError::Lex(e) => e.span,
            SyntaxError::Parse(e) => e.span(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    /// Largest number of tokens inspected ahead of the cursor at any point.
    pub max_lookahead: usize,
}

// ---------------------------------------------------------------------------
// phase 1: unified tree

#[derive(Debug, Clone)]
pub(crate) struct Node {
    kind: NodeKind,
    span: Span,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Skip,
    Seq(Box<Node>, Box<Node>),
    If(Box<Node>, Box<Node>, Option<Box<Node>>),
    Repeat(Box<Node>, Box<Node>),
    While(Box<Node>, Box<Node>),
    Comma(Box<Node>, Box<Node>),
    Const(Literal),
    Var(String),
    BinOp(BinOp, Box<Node>, Box<Node>),
    Field(Box<Node>, String),
    Decl(Type, String, Box<Node>),
    Assign(String, Box<Node>),
    ComponentCall(String, String, Vec<Node>),
    Call(String, Vec<Node>),
}

impl NodeKind {
    fn statement_keyword(&self) -> Option<&'static str> {
        match self {
            NodeKind::Skip => Some("skip"),
            NodeKind::Seq(..) => Some("`;` sequence"),
            NodeKind::If(..) => Some("if"),
            NodeKind::Repeat(..) => Some("repeat"),
            NodeKind::While(..) => Some("while"),
            _ => None,
        }
    }
}

struct RawFunction {
    return_type: Type,
    name: String,
    params: Vec<(String, Type)>,
    body: Node,
    span: Span,
}

struct RawGlobal {
    ty: Type,
    name: String,
    init: Node,
    span: Span,
}

/// Token cursor that records how far ahead it has been asked to look.
struct Cursor<'t> {
    tokens: &'t [Token],
    pos: usize,
    max_lookahead: usize,
    eof: Span,
}

impl<'t> Cursor<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        let eof = tokens
            .last()
            .map(|t| Span {
                offset: t.span.offset + t.span.length as usize,
                line: t.span.line,
                column: t.span.column + t.span.length,
                length: 0,
            })
            .unwrap_or(Span { offset: 0, line: 1, column: 1, length: 0 });
        Cursor { tokens, pos: 0, max_lookahead: 0, eof }
    }

    fn peek_nth(&mut self, k: usize) -> Option<&'t Token> {
        assert!(k < MAX_LOOKAHEAD, "parser requested lookahead {} beyond LL({MAX_LOOKAHEAD})", k + 1);
        self.max_lookahead = self.max_lookahead.max(k + 1);
        self.tokens.get(self.pos + k)
    }

    fn peek(&mut self) -> Option<TokenKind> {
        self.peek_nth(0).map(|t| t.kind)
    }

    fn peek2(&mut self) -> Option<TokenKind> {
        self.peek_nth(1).map(|t| t.kind)
    }

    fn span(&mut self) -> Span {
        self.peek_nth(0).map(|t| t.span).unwrap_or(self.eof)
    }

    fn prev_span(&self) -> Span {
        self.pos.checked_sub(1).map(|i| self.tokens[i].span).unwrap_or(self.eof)
    }

    fn bump(&mut self) -> &'t Token {
        let tok = &self.tokens[self.pos];
        self.pos += 1;
        tok
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&mut self, expected: &[&str]) -> ParseError {
        let found = match self.peek_nth(0) {
            Some(t) => format!("`{}`", t.text),
            None => "end of input".to_string(),
        };
        ParseError::Unexpected {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'t Token, ParseError> {
        if self.peek() == Some(kind) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[kind.describe()]))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        let tok = self.expect(TokenKind::Ident)?;
        Ok((tok.text.clone(), tok.span))
    }
}

fn is_type_keyword(kind: Option<TokenKind>) -> bool {
    matches!(kind, Some(TokenKind::Void | TokenKind::Bool | TokenKind::Int | TokenKind::Float))
}

fn node(kind: NodeKind, span: Span) -> Node {
    Node { kind, span }
}

struct Phase1<'t> {
    cur: Cursor<'t>,
}

type PResult<T> = Result<T, ParseError>;

impl<'t> Phase1<'t> {
    fn program(&mut self) -> PResult<(Vec<StructDef>, Vec<RawFunction>, Vec<RawGlobal>)> {
        let mut structs = Vec::new();
        let mut functions = Vec::new();
        let mut globals = Vec::new();
        while let Some(kind) = self.cur.peek() {
            if kind == TokenKind::Struct {
                structs.push(self.struct_def()?);
                continue;
            }
            if !(is_type_keyword(Some(kind)) || kind == TokenKind::Ident) {
                return Err(self.cur.unexpected(&["`struct`", "type"]));
            }
            let start = self.cur.span();
            let ty = self.ty()?;
            let (name, _) = self.cur.ident()?;
            match self.cur.peek() {
                Some(TokenKind::LParen) => functions.push(self.fun_def(start, ty, name)?),
                Some(TokenKind::Assign) => {
                    self.cur.bump();
                    let init = self.assign()?;
                    let span = start.to(self.cur.prev_span());
                    globals.push(RawGlobal { ty, name, init, span });
                }
                _ => return Err(self.cur.unexpected(&["`(`", "`=`"])),
            }
        }
        Ok((structs, functions, globals))
    }

    fn ty(&mut self) -> PResult<Type> {
        let tok = match self.cur.peek() {
            Some(TokenKind::Void | TokenKind::Bool | TokenKind::Int | TokenKind::Float | TokenKind::Ident) => {
                self.cur.bump()
            }
            _ => return Err(self.cur.unexpected(&["type"])),
        };
        Ok(match tok.kind {
            TokenKind::Void => Type::Void,
            TokenKind::Bool => Type::Bool,
            TokenKind::Int => Type::Int,
            TokenKind::Float => Type::Float,
            _ => Type::Struct(tok.text.clone()),
        })
    }

    fn struct_def(&mut self) -> PResult<StructDef> {
        let start = self.cur.expect(TokenKind::Struct)?.span;
        let (name, _) = self.cur.ident()?;
        self.cur.expect(TokenKind::Begin)?;
        let mut fields = Vec::new();
        while !self.cur.eat(TokenKind::End) {
            let ty = self.ty()?;
            let (field, _) = self.cur.ident()?;
            self.cur.expect(TokenKind::Semi)?;
            fields.push((field, ty));
        }
        Ok(StructDef { name, fields, span: start.to(self.cur.prev_span()) })
    }

    fn fun_def(&mut self, start: Span, return_type: Type, name: String) -> PResult<RawFunction> {
        self.cur.expect(TokenKind::LParen)?;
        let mut params = Vec::new();
        if !self.cur.eat(TokenKind::RParen) {
            loop {
                let ty = self.ty()?;
                let (param, _) = self.cur.ident()?;
                params.push((param, ty));
                if self.cur.eat(TokenKind::RParen) {
                    break;
                }
                self.cur.expect(TokenKind::Comma)?;
            }
        }
        self.cur.expect(TokenKind::Begin)?;
        let body = self.body()?;
        self.cur.expect(TokenKind::End)?;
        Ok(RawFunction { return_type, name, params, body, span: start.to(self.cur.prev_span()) })
    }

    /// `seq (',' body)?`: the comma expression, loosest level.
    fn body(&mut self) -> PResult<Node> {
        let lhs = self.seq()?;
        if self.cur.eat(TokenKind::Comma) {
            let rhs = self.body()?;
            let span = lhs.span.to(rhs.span);
            return Ok(node(NodeKind::Comma(Box::new(lhs), Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    /// `assign (';' seq)?`, right-associated.
    fn seq(&mut self) -> PResult<Node> {
        let lhs = self.assign()?;
        if self.cur.eat(TokenKind::Semi) {
            let rhs = self.seq()?;
            let span = lhs.span.to(rhs.span);
            return Ok(node(NodeKind::Seq(Box::new(lhs), Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    fn assign(&mut self) -> PResult<Node> {
        let first = self.cur.peek();
        let second = self.cur.peek2();
        let is_decl = second == Some(TokenKind::Ident) && (is_type_keyword(first) || first == Some(TokenKind::Ident));
        if is_decl {
            let start = self.cur.span();
            let ty = self.ty()?;
            let (name, _) = self.cur.ident()?;
            self.cur.expect(TokenKind::Assign)?;
            let init = self.assign()?;
            let span = start.to(init.span);
            return Ok(node(NodeKind::Decl(ty, name, Box::new(init)), span));
        }
        if first == Some(TokenKind::Ident) && second == Some(TokenKind::Assign) {
            let (name, start) = self.cur.ident()?;
            self.cur.bump();
            let value = self.assign()?;
            let span = start.to(value.span);
            return Ok(node(NodeKind::Assign(name, Box::new(value)), span));
        }
        self.or()
    }

    fn left_assoc(
        &mut self,
        next: fn(&mut Self) -> PResult<Node>,
        op_of: fn(TokenKind) -> Option<BinOp>,
    ) -> PResult<Node> {
        let mut lhs = next(self)?;
        while let Some(op) = self.cur.peek().and_then(op_of) {
            self.cur.bump();
            let rhs = next(self)?;
            let span = lhs.span.to(rhs.span);
            lhs = node(NodeKind::BinOp(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Node> {
        self.left_assoc(Self::and, |k| (k == TokenKind::Or).then_some(BinOp::Or))
    }

    fn and(&mut self) -> PResult<Node> {
        self.left_assoc(Self::comparison, |k| (k == TokenKind::And).then_some(BinOp::And))
    }

    fn comparison(&mut self) -> PResult<Node> {
        let lhs = self.additive()?;
        let op = match self.cur.peek() {
            Some(TokenKind::Gt) => BinOp::Gt,
            Some(TokenKind::Ge) => BinOp::Ge,
            Some(TokenKind::EqEq) => BinOp::Eq,
            Some(TokenKind::Ne) => BinOp::Ne,
            Some(TokenKind::Le) => BinOp::Le,
            Some(TokenKind::Lt) => BinOp::Lt,
            _ => return Ok(lhs),
        };
        self.cur.bump();
        let rhs = self.additive()?;
        let span = lhs.span.to(rhs.span);
        Ok(node(NodeKind::BinOp(op, Box::new(lhs), Box::new(rhs)), span))
    }

    fn additive(&mut self) -> PResult<Node> {
        self.left_assoc(Self::multiplicative, |k| match k {
            TokenKind::Plus => Some(BinOp::Add),
            TokenKind::Minus => Some(BinOp::Sub),
            _ => None,
        })
    }

    fn multiplicative(&mut self) -> PResult<Node> {
        self.left_assoc(Self::postfix, |k| (k == TokenKind::Star).then_some(BinOp::Mul))
    }

    fn postfix(&mut self) -> PResult<Node> {
        let mut base = self.primary()?;
        while self.cur.eat(TokenKind::Dot) {
            let (field, fspan) = self.cur.ident()?;
            let span = base.span.to(fspan);
            base = node(NodeKind::Field(Box::new(base), field), span);
        }
        Ok(base)
    }

    fn args(&mut self) -> PResult<Vec<Node>> {
        self.cur.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if self.cur.eat(TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.assign()?);
            if self.cur.eat(TokenKind::RParen) {
                return Ok(args);
            }
            if !self.cur.eat(TokenKind::Comma) {
                return Err(self.cur.unexpected(&["`,`", "`)`"]));
            }
        }
    }

    fn primary(&mut self) -> PResult<Node> {
        let start = self.cur.span();
        let Some(kind) = self.cur.peek() else {
            return Err(self.cur.unexpected(&["expression"]));
        };
        let kind = match kind {
            TokenKind::IntLit => {
                let tok = self.cur.bump();
                let n: BigInt = tok.text.parse().expect("lexer guarantees digits");
                NodeKind::Const(Literal::Int(n))
            }
            TokenKind::FloatLit => {
                let tok = self.cur.bump();
                NodeKind::Const(Literal::Float(tok.text.parse().expect("lexer guarantees float syntax")))
            }
            TokenKind::True | TokenKind::False => {
                let tok = self.cur.bump();
                NodeKind::Const(Literal::Bool(tok.kind == TokenKind::True))
            }
            TokenKind::Ident => match self.cur.peek2() {
                Some(TokenKind::LParen) => {
                    let (name, _) = self.cur.ident()?;
                    NodeKind::Call(name, self.args()?)
                }
                Some(TokenKind::ColonColon) => {
                    let (component, _) = self.cur.ident()?;
                    self.cur.bump();
                    let (function, _) = self.cur.ident()?;
                    NodeKind::ComponentCall(component, function, self.args()?)
                }
                _ => NodeKind::Var(self.cur.ident()?.0),
            },
            TokenKind::LParen => {
                self.cur.bump();
                let inner = self.body()?;
                self.cur.expect(TokenKind::RParen)?;
                return Ok(inner);
            }
            TokenKind::Skip => {
                self.cur.bump();
                NodeKind::Skip
            }
            TokenKind::If => {
                self.cur.bump();
                let cond = self.body()?;
                self.cur.expect(TokenKind::Then)?;
                let then = self.body()?;
                let otherwise = if self.cur.eat(TokenKind::Else) { Some(Box::new(self.body()?)) } else { None };
                self.cur.expect(TokenKind::End)?;
                NodeKind::If(Box::new(cond), Box::new(then), otherwise)
            }
            TokenKind::Repeat | TokenKind::While => {
                let tok = self.cur.bump();
                let head = self.body()?;
                self.cur.expect(TokenKind::Begin)?;
                let body = self.body()?;
                self.cur.expect(TokenKind::End)?;
                if tok.kind == TokenKind::Repeat {
                    NodeKind::Repeat(Box::new(head), Box::new(body))
                } else {
                    NodeKind::While(Box::new(head), Box::new(body))
                }
            }
            _ => return Err(self.cur.unexpected(&["expression"])),
        };
        Ok(node(kind, start.to(self.cur.prev_span())))
    }
}

// ---------------------------------------------------------------------------
// phase 2: statement / expression classification

struct Classifier {
    structs: HashSet<String>,
}

impl Classifier {
    fn expr(&self, n: &Node) -> PResult<Expr> {
        if let Some(what) = n.kind.statement_keyword() {
            return Err(ParseError::Classification {
                span: n.span,
                message: format!("statement ({what}) used where a value is required"),
            });
        }
        let args = |xs: &[Node]| xs.iter().map(|a| self.expr(a)).collect::<PResult<Vec<_>>>();
        let kind = match &n.kind {
            NodeKind::Comma(s, e) => ExprKind::Comma(Box::new(self.stmt(s)?), Box::new(self.expr(e)?)),
            NodeKind::Const(l) => ExprKind::Const(l.clone()),
            NodeKind::Var(x) => ExprKind::Var(x.clone()),
            NodeKind::BinOp(op, a, b) => ExprKind::BinOp(*op, Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            NodeKind::Field(e, f) => ExprKind::Field(Box::new(self.expr(e)?), f.clone()),
            NodeKind::Decl(t, x, e) => ExprKind::Decl(t.clone(), x.clone(), Box::new(self.expr(e)?)),
            NodeKind::Assign(x, e) => ExprKind::Assign(x.clone(), Box::new(self.expr(e)?)),
            NodeKind::ComponentCall(c, f, xs) => {
                ExprKind::ComponentCall { component: c.clone(), function: f.clone(), args: args(xs)? }
            }
            NodeKind::Call(name, xs) if self.structs.contains(name) => ExprKind::Construct(name.clone(), args(xs)?),
            NodeKind::Call(name, xs) => ExprKind::Call(name.clone(), args(xs)?),
            NodeKind::Skip | NodeKind::Seq(..) | NodeKind::If(..) | NodeKind::Repeat(..) | NodeKind::While(..) => {
                unreachable!("statement forms rejected above")
            }
        };
        Ok(Expr { kind, span: n.span, ann: () })
    }

    fn stmt(&self, n: &Node) -> PResult<Stmt> {
        let kind = match &n.kind {
            NodeKind::Skip => StmtKind::Skip,
            NodeKind::Seq(a, b) => StmtKind::Seq(Box::new(self.stmt(a)?), Box::new(self.stmt(b)?)),
            NodeKind::If(c, t, e) => StmtKind::If(
                self.expr(c)?,
                Box::new(self.stmt(t)?),
                e.as_ref().map(|e| self.stmt(e).map(Box::new)).transpose()?,
            ),
            NodeKind::Repeat(c, b) => StmtKind::Repeat(self.expr(c)?, Box::new(self.stmt(b)?)),
            NodeKind::While(c, b) => StmtKind::While(self.expr(c)?, Box::new(self.stmt(b)?)),
            _ => StmtKind::Expr(self.expr(n)?),
        };
        Ok(Stmt { kind, span: n.span })
    }

    /// A function body is an expression; a `void` function whose body is a
    /// bare statement gets an implicit unit result.
    fn body(&self, n: &Node, return_type: &Type) -> PResult<Expr> {
        if *return_type == Type::Void && n.kind.statement_keyword().is_some() {
            let stmt = self.stmt(n)?;
            let unit = Expr { kind: ExprKind::Const(Literal::Unit), span: n.span, ann: () };
            return Ok(Expr { kind: ExprKind::Comma(Box::new(stmt), Box::new(unit)), span: n.span, ann: () });
        }
        if let Some(what) = n.kind.statement_keyword() {
            return Err(ParseError::Classification {
                span: n.span,
                message: format!(
                    "body of a non-void function is a statement ({what}); use `<stmt>, <expr>` to produce a value"
                ),
            });
        }
        self.expr(n)
    }
}

/// Parses a token list into a [`Program`].
pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    parse_with_stats(tokens).map(|(p, _)| p)
}

/// Like [`parse`], also reporting how much lookahead phase 1 used.
pub fn parse_with_stats(tokens: &[Token]) -> Result<(Program, ParseStats), ParseError> {
    let mut phase1 = Phase1 { cur: Cursor::new(tokens) };
    let (structs, raw_functions, raw_globals) = phase1.program()?;
    let stats = ParseStats { max_lookahead: phase1.cur.max_lookahead };

    let classifier = Classifier { structs: structs.iter().map(|s| s.name.clone()).collect() };
    let mut functions = Vec::with_capacity(raw_functions.len());
    for f in raw_functions {
        if classifier.structs.contains(&f.name) {
            return Err(ParseError::Classification {
                span: f.span,
                message: format!("function `{}` has the same name as a struct", f.name),
            });
        }
        let body = classifier.body(&f.body, &f.return_type)?;
        functions.push(FunDef { return_type: f.return_type, name: f.name, params: f.params, body, span: f.span });
    }
    let globals = raw_globals
        .into_iter()
        .map(|g| Ok(GlobalDef { init: classifier.expr(&g.init)?, ty: g.ty, name: g.name, span: g.span }))
        .collect::<PResult<Vec<_>>>()?;
    Ok((Program { structs, functions, globals }, stats))
}

/// Tokenizes and parses source text.
pub fn parse_source(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    Ok(parse(&tokens)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn program(src: &str) -> Program {
        let mut p = parse_source(src).unwrap_or_else(|e| panic!("{e}"));
        p.strip_spans();
        p
    }

    fn e(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default(), ann: () }
    }

    fn s(kind: StmtKind) -> Stmt {
        Stmt { kind, span: Span::default() }
    }

    fn int(n: i64) -> Expr {
        e(ExprKind::Const(Literal::Int(n.into())))
    }

    fn var(x: &str) -> Expr {
        e(ExprKind::Var(x.into()))
    }

    fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        e(ExprKind::BinOp(op, Box::new(a), Box::new(b)))
    }

    fn body_of(src: &str) -> Expr {
        program(src).functions.remove(0).body
    }

    #[test]
    fn global_definition() {
        let p = program("int g = 0");
        assert_eq!(p.globals.len(), 1);
        assert_eq!(p.globals[0].name, "g");
        assert_eq!(p.globals[0].ty, Type::Int);
        assert_eq!(p.globals[0].init, int(0));
    }

    #[test]
    fn void_statement_body_gets_unit_result() {
        let body = body_of("void main() begin skip end");
        let unit = e(ExprKind::Const(Literal::Unit));
        assert_eq!(body, e(ExprKind::Comma(Box::new(s(StmtKind::Skip)), Box::new(unit))));
    }

    #[test]
    fn comma_expression_body() {
        let body = body_of("int f() begin x = 1, x end");
        let assign = e(ExprKind::Assign("x".into(), Box::new(int(1))));
        assert_eq!(body, e(ExprKind::Comma(Box::new(s(StmtKind::Expr(assign))), Box::new(var("x")))));
    }

    #[test]
    fn precedence_table() {
        let body = body_of("int f() begin 1 + 2 * 3 end");
        assert_eq!(body, bin(BinOp::Add, int(1), bin(BinOp::Mul, int(2), int(3))));

        let body = body_of("bool f() begin a or b and c < d - e - g end");
        let sub = bin(BinOp::Sub, bin(BinOp::Sub, var("d"), var("e")), var("g"));
        let expected = bin(BinOp::Or, var("a"), bin(BinOp::And, var("b"), bin(BinOp::Lt, var("c"), sub)));
        assert_eq!(body, expected);
    }

    #[test]
    fn comparisons_do_not_chain() {
        let err = parse_source("bool f() begin 1 < 2 < 3 end").unwrap_err();
        assert!(matches!(err, SyntaxError::Parse(ParseError::Unexpected { .. })), "{err}");
    }

    #[test]
    fn sequences_are_right_associated() {
        let body = body_of("void f() begin skip; skip; skip end");
        let ExprKind::Comma(stmt, _) = body.kind else { panic!() };
        let StmtKind::Seq(first, rest) = stmt.kind else { panic!() };
        assert_eq!(first.kind, StmtKind::Skip);
        assert!(matches!(rest.kind, StmtKind::Seq(..)));
    }

    #[test]
    fn struct_construction_and_field_access() {
        let p = program("struct P begin int x; int y; end int f() begin P(1, 2).y end");
        assert_eq!(p.structs[0].fields, vec![("x".into(), Type::Int), ("y".into(), Type::Int)]);
        let construct = e(ExprKind::Construct("P".into(), vec![int(1), int(2)]));
        assert_eq!(p.functions[0].body, e(ExprKind::Field(Box::new(construct), "y".into())));
    }

    #[test]
    fn struct_typed_declaration_and_function() {
        let p = program("struct P begin int x; end P mk(int v) begin P p = P(v), p end P origin = mk(0)");
        assert_eq!(p.functions[0].return_type, Type::Struct("P".into()));
        assert_eq!(p.globals[0].ty, Type::Struct("P".into()));
        let ExprKind::Comma(stmt, _) = &p.functions[0].body.kind else { panic!() };
        let StmtKind::Expr(decl) = &stmt.kind else { panic!() };
        assert!(matches!(&decl.kind, ExprKind::Decl(Type::Struct(n), x, _) if n == "P" && x == "p"));
    }

    #[test]
    fn component_calls() {
        let body = body_of("int f() begin Radio::send(1, x + 1) end");
        let ExprKind::ComponentCall { component, function, args } = body.kind else { panic!() };
        assert_eq!((component.as_str(), function.as_str(), args.len()), ("Radio", "send", 2));
    }

    #[test]
    fn statement_in_value_position_is_a_classification_error() {
        let err = parse_source("int f() begin x = if c then 1 else 2 end end").unwrap_err();
        assert!(matches!(err, SyntaxError::Parse(ParseError::Classification { .. })), "{err}");
        let err = parse_source("int f() begin skip end").unwrap_err();
        assert!(matches!(err, SyntaxError::Parse(ParseError::Classification { .. })), "{err}");
        let err = parse_source("int f() begin 1 + while x begin skip end end").unwrap_err();
        assert!(matches!(err, SyntaxError::Parse(ParseError::Classification { .. })), "{err}");
    }

    #[test]
    fn statement_allowed_as_left_arm_of_comma() {
        let body = body_of("int f() begin if c then x = 1 else skip end, x end");
        let ExprKind::Comma(stmt, value) = body.kind else { panic!() };
        assert!(matches!(stmt.kind, StmtKind::If(_, _, Some(_))));
        assert_eq!(*value, var("x"));
    }

    #[test]
    fn loops_and_nested_comma_on_the_right() {
        let body = body_of("int f(int n) begin repeat n begin x = x + 1 end, while x > 0 begin x = x - 1 end, x end");
        let ExprKind::Comma(first, rest) = body.kind else { panic!() };
        assert!(matches!(first.kind, StmtKind::Repeat(..)));
        let ExprKind::Comma(second, last) = rest.kind else { panic!() };
        assert!(matches!(second.kind, StmtKind::While(..)));
        assert_eq!(*last, var("x"));
    }

    #[test]
    fn parenthesized_expressions() {
        let body = body_of("int f() begin (1 + 2) * 3 end");
        assert_eq!(body, bin(BinOp::Mul, bin(BinOp::Add, int(1), int(2)), int(3)));
    }

    #[test]
    fn function_named_like_struct_is_rejected() {
        let err = parse_source("struct P begin end int P() begin 1 end").unwrap_err();
        assert!(matches!(err, SyntaxError::Parse(ParseError::Classification { .. })));
    }

    #[test]
    fn error_reports_location_and_expectation() {
        let err = parse_source("int f() begin 1 +\n end").unwrap_err();
        let SyntaxError::Parse(ParseError::Unexpected { span, expected, found }) = err else { panic!() };
        assert_eq!((span.line, span.column), (2, 2));
        assert_eq!(expected, vec!["expression".to_string()]);
        assert_eq!(found, "`end`");
        let err = parse_source("int f() begin 1").unwrap_err();
        assert!(err.to_string().contains("end of input"), "{err}");
    }

    #[test]
    fn lookahead_never_exceeds_two() {
        let src = "struct P begin int x; end int g = 1 P q = P(2) \
                   int f(int a, P b) begin int y = a; P z = b; y = C::m(y, z.x), f(y - 1, P(y)) end";
        let tokens = tokenize(src).unwrap();
        let (_, stats) = parse_with_stats(&tokens).unwrap();
        assert_eq!(stats.max_lookahead, 2);
    }

    #[test]
    fn empty_program() {
        assert_eq!(program(""), Program::default());
    }
}
