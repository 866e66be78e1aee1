//! Properties of the shipped corpus: engine agreement, parser round-trip,
//! rejection of ill-typed programs and byte-stable term goldens.

mod common;

use common::*;
use eca_core::runtime::RunOptions;
use eca_core::scenario::{check_entry, check_source, read_file, Engine, LoadError, Prepared};
use eca_core::syntax::{parse_source, parse_with_stats, pretty_print, tokenize, MAX_LOOKAHEAD};
use eca_core::transform::transform_program;
use num_rational::BigRational;

#[test]
fn corpus_is_large_enough() {
    let all = scenarios();
    assert!(all.len() >= 30, "{} programs", all.len());
    for (entry, specs) in &all {
        assert!(specs.len() >= 3, "{} has {} scenarios", entry.name, specs.len());
    }
}

#[test]
fn every_scenario_passes_on_both_engines() {
    let options = RunOptions::default();
    let failures: Vec<String> = programs()
        .iter()
        .flat_map(|e| check_entry(e, &options))
        .filter(|r| !r.verdict.passed())
        .map(|r| format!("{}:{}: {}", r.program, r.scenario, r.verdict))
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn pretty_print_round_trips() {
    for entry in programs() {
        let source = read_file(&entry.program).unwrap();
        let mut original = parse_source(&source).unwrap();
        let printed = pretty_print(&original);
        let mut reparsed = parse_source(&printed).unwrap_or_else(|e| panic!("{}: {e}\n{printed}", entry.name));
        assert_eq!(pretty_print(&reparsed), printed, "{}: printing is not a fixed point", entry.name);
        original.strip_spans();
        reparsed.strip_spans();
        assert_eq!(original, reparsed, "{}", entry.name);
    }
}

#[test]
fn lookahead_stays_within_two_tokens() {
    let dirs = ["programs", "ill_typed"];
    for dir in dirs {
        for entry in eca_core::scenario::discover(&corpus().join(dir)).unwrap() {
            let tokens = tokenize(&read_file(&entry.program).unwrap()).unwrap();
            let (_, stats) = parse_with_stats(&tokens).unwrap();
            assert!(stats.max_lookahead <= MAX_LOOKAHEAD, "{}: {}", entry.name, stats.max_lookahead);
        }
    }
}

#[test]
fn well_typed_corpus_is_accepted() {
    let models = standard_models();
    for entry in programs() {
        let source = read_file(&entry.program).unwrap();
        if let Err(e) = check_source(&entry.program, &source, &models) {
            panic!("{:#?}", e.diagnostics());
        }
    }
}

#[test]
fn ill_typed_programs_are_rejected_at_their_location() {
    let models = standard_models();
    let expected = ill_typed_expectations();
    let entries = eca_core::scenario::discover(&corpus().join("ill_typed")).unwrap();
    assert!(entries.len() >= 10);
    assert_eq!(entries.len(), expected.len(), "every ill-typed program needs an expected location");
    for entry in entries {
        let (line, column) = expected[&entry.name];
        let source = read_file(&entry.program).unwrap();
        match check_source(&entry.program, &source, &models) {
            Err(LoadError::Type { errors, .. }) => {
                let first = &errors[0].span;
                assert_eq!((first.line, first.column), (line, column), "{}: {}", entry.name, errors[0]);
            }
            other => panic!("{}: expected a type error, got {other:?}", entry.name),
        }
    }
}

#[test]
fn doubling_power_doubles_only_time_draw() {
    let two = BigRational::from_integer(2.into());
    let options = RunOptions::default();
    for (entry, specs) in scenarios() {
        for spec in &specs {
            let mut s = load(&entry, spec);
            let base = s.prepared.run(&s.env, &s.inputs, Engine::Both, &options);
            s.env.models = s.env.models.scale_power(&two);
            let doubled = s.prepared.run(&s.env, &s.inputs, Engine::Both, &options);
            let (Ok(a), Ok(b)) = (base.primary(), doubled.primary()) else { continue };
            assert!(doubled.divergence().is_none(), "{}:{}", entry.name, spec.name);
            assert_eq!(b.breakdown.time_draw, a.breakdown.time_draw.scale(&two), "{}:{}", entry.name, spec.name);
            assert_eq!(b.breakdown.transition, a.breakdown.transition, "{}:{}", entry.name, spec.name);
        }
    }
}

const GOLDEN: [&str; 6] = ["dev4_driver", "factorial", "even_odd", "multi_arg", "radio_send", "struct_param"];

/// Set `ECA_BLESS=1` to rewrite the golden files from the current output.
#[test]
fn transformed_terms_match_goldens() {
    let models = standard_models();
    let bless = std::env::var_os("ECA_BLESS").is_some();
    for name in GOLDEN {
        let path = corpus().join(format!("programs/{name}.eca"));
        let typed = check_source(&path, &read_file(&path).unwrap(), &models).unwrap();
        let rendered = transform_program(&typed).unwrap().render_terms();
        assert_eq!(transform_program(&typed).unwrap().render_terms(), rendered, "{name}: rendering is not deterministic");
        let golden = corpus().join(format!("golden/{name}.term"));
        if bless {
            std::fs::write(&golden, &rendered).unwrap();
        }
        let stored = std::fs::read(&golden).unwrap_or_else(|e| panic!("{}: {e}", golden.display()));
        assert_eq!(String::from_utf8(stored).unwrap(), rendered, "{name}");
    }
}

#[test]
fn analysis_is_environment_independent() {
    let options = RunOptions::default();
    for (entry, specs) in scenarios() {
        let first = load(&entry, &specs[0]);
        for spec in &specs[1..] {
            let other = load(&entry, spec);
            let shared = Prepared { program: other.prepared.program.clone(), analysis: first.prepared.analysis.clone() };
            let a = shared.run(&other.env, &other.inputs, Engine::Transform, &options);
            let b = other.prepared.run(&other.env, &other.inputs, Engine::Transform, &options);
            assert_eq!(a.primary(), b.primary(), "{}:{}", entry.name, spec.name);
        }
    }
}
