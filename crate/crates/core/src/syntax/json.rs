//! JSON rendering of syntax trees. Each node is an object tagged by `node`;
//! spans are `"line:col"` strings; integers are decimal strings.

use serde_json::{json, Value as Json};

use super::ast::*;

pub fn program_to_json<A>(p: &Program<A>) -> Json {
    json!({
        "structs": p.structs.iter().map(|s| json!({
            "name": s.name,
            "span": s.span.to_string(),
            "fields": s.fields.iter().map(|(f, t)| json!({ "name": f, "type": t.to_string() })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "globals": p.globals.iter().map(|g| json!({
            "name": g.name,
            "type": g.ty.to_string(),
            "span": g.span.to_string(),
            "init": expr_to_json(&g.init),
        })).collect::<Vec<_>>(),
        "functions": p.functions.iter().map(|f| json!({
            "name": f.name,
            "returns": f.return_type.to_string(),
            "params": f.params.iter().map(|(x, t)| json!({ "name": x, "type": t.to_string() })).collect::<Vec<_>>(),
            "span": f.span.to_string(),
            "body": expr_to_json(&f.body),
        })).collect::<Vec<_>>(),
    })
}

fn literal(l: &Literal) -> Json {
    match l {
        Literal::Unit => Json::Null,
        Literal::Bool(b) => json!(b),
        Literal::Int(n) => json!(n.to_string()),
        Literal::Float(x) => json!(x),
    }
}

pub fn expr_to_json<A>(e: &Expr<A>) -> Json {
    let span = e.span.to_string();
    let args = |xs: &[Expr<A>]| xs.iter().map(expr_to_json).collect::<Vec<_>>();
    match &e.kind {
        ExprKind::Const(l) => json!({ "node": "const", "span": span, "value": literal(l) }),
        ExprKind::Var(x) => json!({ "node": "var", "span": span, "name": x }),
        ExprKind::BinOp(op, a, b) => json!({
            "node": "binop", "span": span, "op": op.symbol(), "left": expr_to_json(a), "right": expr_to_json(b),
        }),
        ExprKind::Construct(s, xs) => json!({ "node": "construct", "span": span, "struct": s, "args": args(xs) }),
        ExprKind::Field(b, f) => json!({ "node": "field", "span": span, "base": expr_to_json(b), "field": f }),
        ExprKind::Decl(t, x, init) => json!({
            "node": "decl", "span": span, "type": t.to_string(), "name": x, "init": expr_to_json(init),
        }),
        ExprKind::Assign(x, v) => json!({ "node": "assign", "span": span, "name": x, "value": expr_to_json(v) }),
        ExprKind::ComponentCall { component, function, args: xs } => json!({
            "node": "component-call", "span": span, "component": component, "function": function, "args": args(xs),
        }),
        ExprKind::Call(f, xs) => json!({ "node": "call", "span": span, "function": f, "args": args(xs) }),
        ExprKind::Comma(s, e) => json!({ "node": "comma", "span": span, "stmt": stmt_to_json(s), "expr": expr_to_json(e) }),
    }
}

pub fn stmt_to_json<A>(s: &Stmt<A>) -> Json {
    let span = s.span.to_string();
    match &s.kind {
        StmtKind::Skip => json!({ "node": "skip", "span": span }),
        StmtKind::Seq(a, b) => json!({ "node": "seq", "span": span, "first": stmt_to_json(a), "second": stmt_to_json(b) }),
        StmtKind::Expr(e) => json!({ "node": "expr", "span": span, "expr": expr_to_json(e) }),
        StmtKind::If(c, t, e) => json!({
            "node": "if", "span": span, "cond": expr_to_json(c), "then": stmt_to_json(t),
            "else": e.as_ref().map(|e| stmt_to_json(e)),
        }),
        StmtKind::Repeat(n, b) => json!({ "node": "repeat", "span": span, "count": expr_to_json(n), "body": stmt_to_json(b) }),
        StmtKind::While(c, b) => json!({ "node": "while", "span": span, "cond": expr_to_json(c), "body": stmt_to_json(b) }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_source;

    #[test]
    fn renders_nodes() {
        let p = parse_source("int g = 1 int main(int n) begin if n > g then n = 2 end, n end").unwrap();
        let j = program_to_json(&p);
        assert_eq!(j["globals"][0]["init"]["value"], "1");
        let body = &j["functions"][0]["body"];
        assert_eq!(body["node"], "comma");
        assert_eq!(body["stmt"]["node"], "if");
        assert_eq!(body["stmt"]["cond"]["op"], ">");
        assert_eq!(body["stmt"]["else"], Json::Null);
    }
}
