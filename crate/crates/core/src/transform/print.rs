use super::term::{Term, TimeSymbol};

/// Renders a term in operator notation: `>>` for composition, `(+)` for
/// energy addition. Nested compositions and sums are parenthesized; the top
/// level is not. Output depends only on the term's structure.
pub fn print_symbolic(term: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, term);
    out
}

fn write_operand(out: &mut String, t: &Term) {
    if matches!(t, Term::Compose(..) | Term::Plus(..)) {
        out.push('(');
        write_term(out, t);
        out.push(')');
    } else {
        write_term(out, t);
    }
}

fn call(out: &mut String, name: &str, args: &[&Term]) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_term(out, a);
    }
    out.push(')');
}

fn write_time(out: &mut String, t: &TimeSymbol) {
    match t {
        TimeSymbol::Construct(c) => out.push_str(c.key()),
        TimeSymbol::Component { function, .. } => {
            out.push_str("t_");
            out.push_str(function);
        }
    }
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::ConstV(v) => out.push_str(&v.to_string()),
        Term::Lookup(x) => out.push_str(&format!("lookup({x})")),
        Term::BinOpV(op, a, b) => {
            out.push('(');
            write_term(out, a);
            out.push_str(&format!(" {op} "));
            write_term(out, b);
            out.push(')');
        }
        Term::ConstructV { name, fields } => {
            out.push_str(name);
            out.push('(');
            for (i, (_, v)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(out, v);
            }
            out.push(')');
        }
        Term::FieldV(v, x) => {
            out.push_str("field(");
            write_term(out, v);
            out.push_str(&format!(", {x})"));
        }
        Term::CmpValue { component, function, .. } => out.push_str(&format!("V[{component}::{function}]")),
        Term::Id => out.push_str("id"),
        Term::Declare { name, value, state } => binder(out, "declare", name, value, state),
        Term::Update { name, value, state } => binder(out, "update", name, value, state),
        Term::DeclareGlobal { name, value, state } => binder(out, "global", name, value, state),
        Term::CmpEffect { component, function, .. } => out.push_str(&format!("Σ[{component}::{function}]")),
        Term::Scope { params, args } => {
            out.push_str("scope(");
            for (i, (x, (v, s))) in params.iter().zip(args).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(x);
                out.push_str(" <- ");
                write_term(out, v);
                out.push_str(" | ");
                write_term(out, s);
            }
            out.push(')');
        }
        Term::Split(a, b) => call(out, "split", &[a, b]),
        Term::Block(a) => call(out, "block", &[a]),
        Term::LoopState { cond_v, cond_s, body_s } => call(out, "loop_Σ", &[cond_v, cond_s, body_s]),
        Term::RepeatState { count_v, count_s, body_s } => call(out, "repeat_Σ", &[count_v, count_s, body_s]),
        Term::ZeroE => out.push('0'),
        Term::TdEc(time) => {
            out.push_str("td_ec(");
            write_time(out, time);
            out.push(')');
        }
        Term::CmpEnergy { component, function, .. } => out.push_str(&format!("E[{component}::{function}]")),
        Term::Plus(a, b) => {
            write_operand(out, a);
            out.push_str(" (+) ");
            write_operand(out, b);
        }
        Term::LoopEnergy { cond_v, cond_s, cond_e, body_s, body_e } => {
            call(out, "loop_E", &[cond_v, cond_s, cond_e, body_s, body_e])
        }
        Term::RepeatEnergy { count_v, count_s, body_s, body_e } => {
            call(out, "repeat_E", &[count_v, count_s, body_s, body_e])
        }
        Term::Compose(a, b) => {
            write_operand(out, a);
            out.push_str(" >> ");
            write_operand(out, b);
        }
        Term::Cond { cond_v, cond_s, then, otherwise } => call(out, "cond", &[cond_v, cond_s, then, otherwise]),
        Term::Subst(kind, f) => {
            let k = kind.symbol();
            out.push_str(&format!("subst({k}_{f}, rec_{k}({f}))"));
        }
        Term::Rec(kind, f) => out.push_str(&format!("rec_{}({f})", kind.symbol())),
    }
}

fn binder(out: &mut String, op: &str, name: &str, value: &Term, state: &Term) {
    out.push_str(op);
    out.push('(');
    out.push_str(name);
    out.push_str(", ");
    write_term(out, value);
    out.push_str(", ");
    write_term(out, state);
    out.push(')');
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::transform::TermKind;

    fn cmp_energy() -> Arc<Term> {
        Arc::new(Term::CmpEnergy { component: "C".into(), function: "f".into(), arity: 0 })
    }

    #[test]
    fn component_time_and_energy() {
        let td = Arc::new(Term::TdEc(TimeSymbol::Component { component: "C".into(), function: "f".into() }));
        let t = Term::plus(&td, &cmp_energy());
        assert_eq!(print_symbolic(&t), "td_ec(t_f) (+) E[C::f]");
    }

    #[test]
    fn placeholders() {
        assert_eq!(print_symbolic(&Term::Rec(TermKind::Value, "f".into())), "rec_V(f)");
        assert_eq!(print_symbolic(&Term::Subst(TermKind::State, "f".into())), "subst(Σ_f, rec_Σ(f))");
        assert_eq!(print_symbolic(&Term::Subst(TermKind::Energy, "g".into())), "subst(E_g, rec_E(g))");
    }

    #[test]
    fn nested_operators_are_parenthesized() {
        let s = Arc::new(Term::Lookup("x".into()));
        let e = Term::plus(&Term::td(crate::timing::Construct::Var), &cmp_energy());
        let t = Term::compose(&Arc::new(Term::Split(Term::id(), Term::id())), &e);
        assert_eq!(print_symbolic(&t), "split(id, id) >> (td_ec(t_var) (+) E[C::f])");
        assert_eq!(print_symbolic(&s), "lookup(x)");
        assert_eq!(print_symbolic(&Term::Scope { params: vec![], args: vec![] }), "scope()");
    }
}
