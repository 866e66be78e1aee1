//! Acceptance checks. Prints one `criterion N: PASS|FAIL` line per criterion.
//!
//! Criterion 1 asks for a 30 J extended driver on the four-state device; no
//! walk of that machine costs 30 J (see `extended_driver_totals`), so its
//! line reports FAIL without failing the test. Every other criterion must
//! pass.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::time::{Duration, Instant};

use common::*;
use eca_core::hw::ComponentModel;
use eca_core::quantity::Energy;
use eca_core::runtime::{RunOptions, RuntimeError, TraceEvent};
use eca_core::scenario::{check_entry, check_source, discover, read_file, Engine, LoadError, Outcome};
use eca_core::syntax::{parse_source, parse_with_stats, pretty_print, program_to_json, tokenize, MAX_LOOKAHEAD};
use eca_core::transform::{transform_program, Term, TermKind, TermRef, TimeSymbol};
use eca_core::value::Value;
use num_rational::BigRational;
use serde_json::Value as Json;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn entry(name: &str) -> eca_core::scenario::CorpusEntry {
    programs().into_iter().find(|e| e.name == name).unwrap_or_else(|| panic!("missing corpus program {name}"))
}

fn scenario(program: &str, name: &str) -> Loaded {
    let e = entry(program);
    let spec = e.scenarios().unwrap().into_iter().find(|s| s.name == name).unwrap();
    load(&e, &spec)
}

fn run_both(s: &Loaded, options: &RunOptions) -> Outcome {
    s.prepared.run(&s.env, &s.inputs, Engine::Both, options)
}

fn both_energies(o: &Outcome) -> Option<(Energy, Energy)> {
    match (o.interp.as_ref()?, o.transform.as_ref()?) {
        (Ok(a), Ok(b)) => Some((a.energy.clone(), b.energy.clone())),
        _ => None,
    }
}

/// Totals of every walk from the initial state that fires the reset edge
/// (c→a) and the start edge (a→b) at least twice, up to `bound` joules.
fn extended_driver_totals(model: &ComponentModel, bound: i64) -> BTreeSet<i64> {
    let edges: Vec<(String, String, String, i64)> = model
        .functions
        .iter()
        .flat_map(|(f, def)| {
            def.transitions.iter().map(move |t| {
                assert!(t.energy.is_integer());
                let joules = t.energy.value().to_integer().try_into().unwrap();
                (f.clone(), t.from.clone(), t.to.clone(), joules)
            })
        })
        .collect();
    let mut totals = BTreeSet::new();
    let mut stack = vec![(model.initial.clone(), 0i64, false, 0u32)];
    while let Some((state, total, reset, starts)) = stack.pop() {
        if reset && starts >= 2 {
            totals.insert(total);
        }
        for (f, from, to, e) in &edges {
            if *from == state && total + e <= bound {
                stack.push((to.clone(), total + e, reset || f == "reset", starts + u32::from(f == "start")));
            }
        }
    }
    totals
}

fn criterion_1() -> Verdict {
    let options = RunOptions::default().with_trace();
    let started = Instant::now();
    let driver = scenario("dev4_driver", "zero");
    let outcome = run_both(&driver, &options);
    let elapsed = started.elapsed();
    let labels = [("start", "a", "b", 4), ("work", "b", "b", 8), ("pause", "b", "c", 3), ("stop", "c", "d", 1)];
    let oracle: i64 = labels.iter().map(|l| l.3).sum();
    let trace_ok = match outcome.primary() {
        Ok(r) => {
            let fired: Vec<_> = r
                .trace
                .iter()
                .filter_map(|t| match t {
                    TraceEvent::Transition { function, from, to, energy, .. } => {
                        Some((function.clone(), from.clone(), to.clone(), energy.clone()))
                    }
                    TraceEvent::TimeDraw { energy, .. } => {
                        assert!(energy.is_zero());
                        None
                    }
                })
                .collect();
            let expected: Vec<_> =
                labels.iter().map(|(f, a, b, e)| (f.to_string(), a.to_string(), b.to_string(), Energy::from_integer(*e))).collect();
            fired == expected
        }
        Err(_) => false,
    };
    let sixteen = Energy::from_integer(oracle);
    let base = both_energies(&outcome) == Some((sixteen.clone(), sixteen)) && trace_ok && elapsed < Duration::from_secs(1);

    let model = &driver.env.models.get("Dev").unwrap().clone();
    let totals = extended_driver_totals(model, 40);
    let closest = scenario("dev4_reset", "zero");
    let closest_energy = both_energies(&run_both(&closest, &RunOptions::default()));
    let reachable = totals.iter().map(i64::to_string).collect::<Vec<_>>().join(", ");
    let extended = totals.contains(&30);
    let detail = format!(
        "driver a→b,b→b,b→c,c→d = {oracle} J on both engines: {} ({elapsed:.2?}); extended driver with c→a and a second a→b = 30 J: {} \
         (reachable totals ≤ 40 J: {reachable}; start,work,pause,reset,start gives {})",
        if base { "yes" } else { "no" },
        if extended { "reachable" } else { "unreachable on this machine" },
        closest_energy.map_or("an error".to_string(), |(a, b)| format!("{} / {} J", a.to_ratio_string(), b.to_ratio_string())),
    );
    assert!(base, "{detail}");
    verdict(base && extended, detail)
}

/// Every grammar production the corpus must exercise.
fn coverage() -> Vec<(&'static str, bool)> {
    let mut nodes = BTreeSet::new();
    let mut structs = false;
    let mut globals = false;
    let mut multi_arg = false;
    let mut shadowing = false;
    let mut direct = false;
    let mut mutual = false;
    let mut guarded = false;
    fn walk(j: &Json, nodes: &mut BTreeSet<String>, calls: &mut BTreeSet<String>, names: &mut BTreeSet<String>) {
        match j {
            Json::Object(m) => {
                if let Some(Json::String(n)) = m.get("node") {
                    nodes.insert(n.clone());
                    if n == "call" {
                        calls.insert(m["function"].as_str().unwrap().to_string());
                    }
                    if n == "decl" {
                        names.insert(m["name"].as_str().unwrap().to_string());
                    }
                }
                m.values().for_each(|v| walk(v, nodes, calls, names));
            }
            Json::Array(xs) => xs.iter().for_each(|v| walk(v, nodes, calls, names)),
            _ => {}
        }
    }
    for (e, specs) in scenarios() {
        let j = program_to_json(&parse_source(&read_file(&e.program).unwrap()).unwrap());
        structs |= !j["structs"].as_array().unwrap().is_empty();
        let global_names: BTreeSet<String> =
            j["globals"].as_array().unwrap().iter().map(|g| g["name"].as_str().unwrap().to_string()).collect();
        globals |= !global_names.is_empty();
        let mut graph = BTreeMap::new();
        for f in j["functions"].as_array().unwrap() {
            let name = f["name"].as_str().unwrap().to_string();
            let params = f["params"].as_array().unwrap();
            multi_arg |= params.len() >= 2;
            let mut calls = BTreeSet::new();
            let mut locals: BTreeSet<String> = params.iter().map(|p| p["name"].as_str().unwrap().to_string()).collect();
            walk(&f["body"], &mut nodes, &mut calls, &mut locals);
            shadowing |= locals.iter().any(|l| global_names.contains(l));
            graph.insert(name, calls);
        }
        for g in j["globals"].as_array().unwrap() {
            walk(&g["init"], &mut nodes, &mut BTreeSet::new(), &mut BTreeSet::new());
        }
        for (f, calls) in &graph {
            direct |= calls.contains(f);
            mutual |= calls.iter().any(|g| g != f && graph.get(g).is_some_and(|back| back.contains(f)));
        }
        if nodes.contains("component-call") {
            for spec in &specs {
                let env = load(&e, spec).env;
                guarded |= env.models.iter().any(|m| m.functions.values().any(|f| f.transitions.iter().any(|t| t.guard.is_some())));
            }
        }
    }
    let mut out = vec![
        ("struct definitions", structs),
        ("globals", globals),
        ("global shadowing", shadowing),
        ("multi-argument functions", multi_arg),
        ("guarded component calls", guarded),
        ("direct recursion", direct),
        ("mutual recursion", mutual),
    ];
    for n in ["const", "var", "binop", "construct", "field", "decl", "assign", "component-call", "call", "comma", "skip", "seq", "expr", "if", "while", "repeat"] {
        out.push((n, nodes.contains(n)));
    }
    out
}

fn criterion_2() -> Verdict {
    let started = Instant::now();
    let options = RunOptions::default();
    let all = scenarios();
    let rows: Vec<_> = programs().iter().flat_map(|e| check_entry(e, &options)).collect();
    let elapsed = started.elapsed();
    let failed: Vec<String> =
        rows.iter().filter(|r| !r.verdict.passed()).map(|r| format!("{}:{} {}", r.program, r.scenario, r.verdict)).collect();
    let min_scenarios = all.iter().map(|(_, s)| s.len()).min().unwrap_or(0);
    let missing: Vec<_> = coverage().into_iter().filter(|(_, c)| !c).map(|(n, _)| n).collect();
    let pass = all.len() >= 30 && min_scenarios >= 3 && failed.is_empty() && missing.is_empty() && elapsed < Duration::from_secs(60);
    verdict(
        pass,
        format!(
            "{} programs, {} scenarios (min {min_scenarios} per program), {} disagreements or unmet expectations, missing productions {missing:?}, {elapsed:.2?}{}",
            all.len(),
            rows.len(),
            failed.len(),
            if failed.is_empty() { String::new() } else { format!(": {failed:?}") },
        ),
    )
}

/// Finds `E_ex ⊕ (Σ_ex ≫ (td(t_f) ⊕ E[C::f]))` for component `c`, function `f`.
fn has_component_shape(t: &TermRef, c: &str, f: &str) -> bool {
    let core = |t: &Term| match t {
        Term::Compose(scope, body) => {
            matches!(scope.as_ref(), Term::Scope { .. })
                && matches!(body.as_ref(), Term::Plus(td, e)
                    if matches!(td.as_ref(), Term::TdEc(TimeSymbol::Component { component, function }) if component == c && function == f)
                    && matches!(e.as_ref(), Term::CmpEnergy { component, function, .. } if component == c && function == f))
        }
        _ => false,
    };
    let mut found = false;
    Term::walk(t, |n| {
        if let Term::Plus(_, rhs) = n {
            found |= core(rhs);
        }
    });
    found
}

fn criterion_3() -> Verdict {
    let models = standard_models();
    let analyze = |name: &str| {
        let path = corpus().join(format!("programs/{name}.eca"));
        transform_program(&check_source(&path, &read_file(&path).unwrap(), &models).unwrap()).unwrap()
    };
    let radio = analyze("radio_send");
    let component = radio.functions.values().any(|j| has_component_shape(&j.energy, "Radio", "send"));
    let fact = analyze("factorial");
    let main_state = fact.main().term(TermKind::State).to_string();
    let wrapped = main_state.contains("subst(Σ_fact, rec_Σ(fact))");
    let placeholders = Term::rec_targets(&fact.functions["fact"].energy).contains(&(TermKind::State, "fact".to_string()));
    let mut stale = Vec::new();
    for name in ["dev4_driver", "factorial", "even_odd", "multi_arg", "radio_send", "struct_param"] {
        let golden = std::fs::read(corpus().join(format!("golden/{name}.term"))).unwrap_or_default();
        let first = analyze(name).render_terms();
        if golden != first.as_bytes() || analyze(name).render_terms() != first {
            stale.push(name);
        }
    }
    verdict(
        component && wrapped && placeholders && stale.is_empty(),
        format!(
            "component call shape E_ex (+) (Σ_ex >> (td_ec(t_f) (+) E_f)): {component}; recursive call wrapped as subst(Σ_f, rec_Σ(f)): {wrapped}; \
             rec placeholders inside fact: {placeholders}; goldens differing: {stale:?}"
        ),
    )
}

fn criterion_4() -> Verdict {
    let s = scenario("var_read", "var-only");
    let phi = s.env.models.get("Dev").unwrap().power["a"].value().clone();
    let t_var = s.env.timing.get(eca_core::timing::Construct::Var).value().clone();
    let oracle = Energy::new(phi * t_var);
    let got = both_energies(&run_both(&s, &RunOptions::default()));
    let pass = oracle == Energy::from_integer(8) && got == Some((oracle.clone(), oracle.clone()));
    verdict(pass, format!("Φ(a)·t_var = {} J; engines {:?}", oracle.to_ratio_string(), got.map(|(a, b)| (a.to_ratio_string(), b.to_ratio_string()))))
}

fn criterion_5() -> Verdict {
    let two = BigRational::from_integer(2.into());
    let options = RunOptions::default();
    let (mut checked, mut skipped, mut bad) = (0, 0, Vec::new());
    for (e, specs) in scenarios() {
        for spec in &specs {
            let mut s = load(&e, spec);
            let base = run_both(&s, &options);
            s.env.models = s.env.models.scale_power(&two);
            let doubled = run_both(&s, &options);
            match (base.primary(), doubled.primary()) {
                (Ok(a), Ok(b)) => {
                    checked += 1;
                    let ok = doubled.divergence().is_none()
                        && b.breakdown.time_draw == a.breakdown.time_draw.scale(&two)
                        && b.breakdown.transition == a.breakdown.transition;
                    if !ok {
                        bad.push(format!("{}:{}", e.name, spec.name));
                    }
                }
                (Err(x), Err(y)) if x == y => skipped += 1,
                _ => bad.push(format!("{}:{}", e.name, spec.name)),
            }
        }
    }
    verdict(bad.is_empty(), format!("{checked} scenarios checked, {skipped} end in the same runtime error either way, violations {bad:?}"))
}

fn criterion_6() -> Verdict {
    let options = RunOptions::default();
    let mut problems = Vec::new();
    for program in ["sum_to", "countdown"] {
        let mut s = scenario(program, "zero");
        for n in 0..=50i64 {
            s.inputs.insert("n".into(), Value::int(n));
            let o = run_both(&s, &options);
            let agree = matches!((&o.interp, &o.transform), (Some(Ok(_)), Some(Ok(_)))) && o.divergence().is_none();
            let value_ok = program != "sum_to" || o.primary().as_ref().is_ok_and(|r| r.value == Value::int(n * (n + 1) / 2));
            if !(agree && value_ok) {
                problems.push(format!("{program}({n})"));
            }
        }
    }
    let s = scenario("divergent", "zero");
    let o = run_both(&s, &options);
    let limit = RunOptions::default().recursion_limit;
    let divergent = match (&o.interp, &o.transform) {
        (Some(Err(a @ RuntimeError::RecursionLimit { limit: l, .. })), Some(Err(b))) => a == b && *l == limit,
        _ => false,
    };
    verdict(
        problems.is_empty() && divergent,
        format!("sum_to and countdown for n in 0..=50: {} disagreements {problems:?}; divergent program hits RecursionLimit({limit}) identically: {divergent}", problems.len()),
    )
}

fn criterion_7() -> Verdict {
    let mut bad = Vec::new();
    let mut worst = 0;
    let entries = programs();
    for e in &entries {
        let source = read_file(&e.program).unwrap();
        let mut a = parse_source(&source).unwrap();
        let mut b = match parse_source(&pretty_print(&a)) {
            Ok(b) => b,
            Err(_) => {
                bad.push(e.name.clone());
                continue;
            }
        };
        a.strip_spans();
        b.strip_spans();
        if a != b {
            bad.push(e.name.clone());
        }
        worst = worst.max(parse_with_stats(&tokenize(&source).unwrap()).unwrap().1.max_lookahead);
    }
    verdict(
        bad.is_empty() && worst <= MAX_LOOKAHEAD && MAX_LOOKAHEAD == 2,
        format!("{} programs round-trip, failures {bad:?}; maximum lookahead {worst} token(s)", entries.len()),
    )
}

fn criterion_8() -> Verdict {
    let models = standard_models();
    let expected = ill_typed_expectations();
    let ill = discover(&corpus().join("ill_typed")).unwrap();
    let mut located = 0;
    let mut bad = Vec::new();
    for e in &ill {
        let source = read_file(&e.program).unwrap();
        match check_source(&e.program, &source, &models) {
            Err(LoadError::Type { errors, .. })
                if expected.get(&e.name) == Some(&(errors[0].span.line, errors[0].span.column)) && errors[0].span.line > 0 =>
            {
                located += 1
            }
            _ => bad.push(e.name.clone()),
        }
    }
    let struct_case = ill.iter().any(|e| e.name == "struct_condition") && !bad.contains(&"struct_condition".to_string());
    let false_rejections: Vec<_> =
        programs().into_iter().filter(|e| check_source(&e.program, &read_file(&e.program).unwrap(), &models).is_err()).map(|e| e.name).collect();
    verdict(
        located >= 10 && bad.is_empty() && struct_case && false_rejections.is_empty(),
        format!(
            "{located}/{} ill-typed programs rejected at the expected line:col (struct-as-condition included: {struct_case}), mislocated {bad:?}; false rejections {false_rejections:?}",
            ill.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [fn() -> Verdict; 8] =
        [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8];
    let mut failed = Vec::new();
    for (i, check) in criteria.iter().enumerate() {
        let v = check();
        let line = format!("criterion {}: {} ({})", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        // written to the handle directly so the line survives output capture
        writeln!(std::io::stdout().lock(), "{line}").unwrap();
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.iter().all(|&n| n == 1), "criteria failed: {failed:?}");
}
