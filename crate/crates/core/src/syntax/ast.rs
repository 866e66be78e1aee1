//! Abstract syntax of ECA programs.
//!
//! Expression and statement nodes are generic over an annotation `A`. The
//! parser produces `()`-annotated trees; the type checker produces trees
//! annotated with each expression's [`Type`].

use std::fmt;

use num_bigint::BigInt;

/// Source location of a token or node: 1-based line and column, byte offset
/// into the source, and length in bytes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub offset: usize,
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl Span {
    /// The smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        if other.offset + other.length as usize <= self.offset {
            return self;
        }
        let end = other.offset + other.length as usize;
        Span { length: (end - self.offset) as u32, ..self }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Void,
    Bool,
    Int,
    Float,
    Struct(String),
}

impl Type {
    pub fn is_primitive(&self) -> bool {
        matches!(self, Type::Bool | Type::Int | Type::Float)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Void => f.write_str("void"),
            Type::Bool => f.write_str("bool"),
            Type::Int => f.write_str("int"),
            Type::Float => f.write_str("float"),
            Type::Struct(name) => f.write_str(name),
        }
    }
}

/// A constant appearing in source. `Unit` has no concrete syntax; it only
/// arises as the implicit result of a statement-bodied `void` function.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Unit,
    Bool(bool),
    Int(BigInt),
    Float(f64),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Unit => f.write_str("unit"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Float(x) => f.write_str(&format_float(*x)),
        }
    }
}

/// Formats a float so that it re-lexes as a float literal (`digits.digits`).
pub fn format_float(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Gt,
    Ge,
    Eq,
    Ne,
    Le,
    Lt,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Le => "<=",
            BinOp::Lt => "<",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne | BinOp::Le | BinOp::Lt)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 3,
            BinOp::And => 4,
            BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne | BinOp::Le | BinOp::Lt => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul => 7,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr<A = ()> {
    pub kind: ExprKind<A>,
    pub span: Span,
    pub ann: A,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind<A = ()> {
    Const(Literal),
    Var(String),
    BinOp(BinOp, Box<Expr<A>>, Box<Expr<A>>),
    Construct(String, Vec<Expr<A>>),
    Field(Box<Expr<A>>, String),
    Decl(Type, String, Box<Expr<A>>),
    Assign(String, Box<Expr<A>>),
    ComponentCall {
        component: String,
        function: String,
        args: Vec<Expr<A>>,
    },
    Call(String, Vec<Expr<A>>),
    Comma(Box<Stmt<A>>, Box<Expr<A>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt<A = ()> {
    pub kind: StmtKind<A>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind<A = ()> {
    Skip,
    Seq(Box<Stmt<A>>, Box<Stmt<A>>),
    Expr(Expr<A>),
    If(Expr<A>, Box<Stmt<A>>, Option<Box<Stmt<A>>>),
    Repeat(Expr<A>, Box<Stmt<A>>),
    While(Expr<A>, Box<Stmt<A>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructDef {
    pub name: String,
    pub fields: Vec<(String, Type)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunDef<A = ()> {
    pub return_type: Type,
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub body: Expr<A>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDef<A = ()> {
    pub ty: Type,
    pub name: String,
    pub init: Expr<A>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program<A = ()> {
    pub structs: Vec<StructDef>,
    pub functions: Vec<FunDef<A>>,
    pub globals: Vec<GlobalDef<A>>,
}

impl<A> Program<A> {
    pub fn function(&self, name: &str) -> Option<&FunDef<A>> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn struct_def(&self, name: &str) -> Option<&StructDef> {
        self.structs.iter().find(|s| s.name == name)
    }

    /// Drops annotations, keeping the tree shape and spans.
    pub fn erase(&self) -> Program {
        Program {
            structs: self.structs.clone(),
            functions: self
                .functions
                .iter()
                .map(|f| FunDef {
                    return_type: f.return_type.clone(),
                    name: f.name.clone(),
                    params: f.params.clone(),
                    body: f.body.erase(),
                    span: f.span,
                })
                .collect(),
            globals: self
                .globals
                .iter()
                .map(|g| GlobalDef { ty: g.ty.clone(), name: g.name.clone(), init: g.init.erase(), span: g.span })
                .collect(),
        }
    }

    /// Resets every span to the default, so that two programs can be compared
    /// structurally.
    pub fn strip_spans(&mut self) {
        for s in &mut self.structs {
            s.span = Span::default();
        }
        for f in &mut self.functions {
            f.span = Span::default();
            f.body.strip_spans();
        }
        for g in &mut self.globals {
            g.span = Span::default();
            g.init.strip_spans();
        }
    }
}

impl<A> Expr<A> {
    pub fn erase(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Const(l) => ExprKind::Const(l.clone()),
            ExprKind::Var(x) => ExprKind::Var(x.clone()),
            ExprKind::BinOp(op, a, b) => ExprKind::BinOp(*op, Box::new(a.erase()), Box::new(b.erase())),
            ExprKind::Construct(s, args) => ExprKind::Construct(s.clone(), args.iter().map(Expr::erase).collect()),
            ExprKind::Field(e, f) => ExprKind::Field(Box::new(e.erase()), f.clone()),
            ExprKind::Decl(t, x, e) => ExprKind::Decl(t.clone(), x.clone(), Box::new(e.erase())),
            ExprKind::Assign(x, e) => ExprKind::Assign(x.clone(), Box::new(e.erase())),
            ExprKind::ComponentCall { component, function, args } => ExprKind::ComponentCall {
                component: component.clone(),
                function: function.clone(),
                args: args.iter().map(Expr::erase).collect(),
            },
            ExprKind::Call(f, args) => ExprKind::Call(f.clone(), args.iter().map(Expr::erase).collect()),
            ExprKind::Comma(s, e) => ExprKind::Comma(Box::new(s.erase()), Box::new(e.erase())),
        };
        Expr { kind, span: self.span, ann: () }
    }

    pub fn strip_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) => {}
            ExprKind::BinOp(_, a, b) => {
                a.strip_spans();
                b.strip_spans();
            }
            ExprKind::Construct(_, args) | ExprKind::Call(_, args) | ExprKind::ComponentCall { args, .. } => {
                args.iter_mut().for_each(Expr::strip_spans)
            }
            ExprKind::Field(e, _) | ExprKind::Decl(_, _, e) | ExprKind::Assign(_, e) => e.strip_spans(),
            ExprKind::Comma(s, e) => {
                s.strip_spans();
                e.strip_spans();
            }
        }
    }
}

impl<A> Stmt<A> {
    pub fn erase(&self) -> Stmt {
        let kind = match &self.kind {
            StmtKind::Skip => StmtKind::Skip,
            StmtKind::Seq(a, b) => StmtKind::Seq(Box::new(a.erase()), Box::new(b.erase())),
            StmtKind::Expr(e) => StmtKind::Expr(e.erase()),
            StmtKind::If(c, t, e) => {
                StmtKind::If(c.erase(), Box::new(t.erase()), e.as_ref().map(|e| Box::new(e.erase())))
            }
            StmtKind::Repeat(n, b) => StmtKind::Repeat(n.erase(), Box::new(b.erase())),
            StmtKind::While(c, b) => StmtKind::While(c.erase(), Box::new(b.erase())),
        };
        Stmt { kind, span: self.span }
    }

    pub fn strip_spans(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            StmtKind::Skip => {}
            StmtKind::Seq(a, b) => {
                a.strip_spans();
                b.strip_spans();
            }
            StmtKind::Expr(e) => e.strip_spans(),
            StmtKind::If(c, t, e) => {
                c.strip_spans();
                t.strip_spans();
                if let Some(e) = e {
                    e.strip_spans();
                }
            }
            StmtKind::Repeat(c, b) | StmtKind::While(c, b) => {
                c.strip_spans();
                b.strip_spans();
            }
        }
    }
}
