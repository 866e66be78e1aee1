#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eca_core::hw::ModelSet;
use eca_core::scenario::{check_source, discover, load_environment, read_file, CorpusEntry, Environment, Prepared, ScenarioSpec};

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn programs() -> Vec<CorpusEntry> {
    discover(&corpus().join("programs")).expect("corpus directory")
}

/// One model per component name, covering every signature the corpus uses.
pub fn standard_models() -> ModelSet {
    let paths: Vec<PathBuf> = ["dev4", "radio", "sensor", "led"].iter().map(|m| corpus().join(format!("models/{m}.toml"))).collect();
    load_environment(&paths, None).expect("standard models").models
}

/// A scenario ready to run: environment, prepared program and parsed inputs.
pub struct Loaded {
    pub spec: ScenarioSpec,
    pub env: Environment,
    pub prepared: Prepared,
    pub inputs: BTreeMap<String, eca_core::value::Value>,
}

pub fn load(entry: &CorpusEntry, spec: &ScenarioSpec) -> Loaded {
    let env = load_environment(&spec.models, spec.timing.as_deref()).unwrap();
    let source = read_file(&entry.program).unwrap();
    let typed = check_source(&entry.program, &source, &env.models).unwrap();
    let prepared = Prepared::new(&entry.program, typed).unwrap();
    let inputs = prepared.main_inputs(&spec.inputs).unwrap();
    Loaded { spec: spec.clone(), env, prepared, inputs }
}

pub fn scenarios() -> Vec<(CorpusEntry, Vec<ScenarioSpec>)> {
    programs()
        .into_iter()
        .map(|e| {
            let specs = e.scenarios().unwrap();
            (e, specs)
        })
        .collect()
}

/// `name = "line:col"` lines of the ill-typed manifest.
pub fn ill_typed_expectations() -> BTreeMap<String, (u32, u32)> {
    let text = std::fs::read_to_string(corpus().join("ill_typed/expected.toml")).unwrap();
    let table: BTreeMap<String, String> = toml::from_str(&text).unwrap();
    table
        .into_iter()
        .map(|(name, loc)| {
            let (l, c) = loc.split_once(':').unwrap();
            (name, (l.parse().unwrap(), c.parse().unwrap()))
        })
        .collect()
}
