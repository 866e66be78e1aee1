//! Analysis and comparison reports, as JSON or aligned text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use eca_core::quantity::Energy;
use eca_core::runtime::{RunResult, RuntimeError};
use eca_core::scenario::{Divergence, Engine, Outcome};
use serde_json::{json, Value as Json};

const DECIMALS: usize = 6;

/// One analyzed (models, timing, inputs) configuration.
#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub models: Vec<String>,
    pub timing: Option<String>,
    pub inputs: BTreeMap<String, String>,
    pub status: Status,
}

#[derive(Debug, Clone)]
pub enum Status {
    Ok { result: Box<RunResult>, engines: BTreeMap<&'static str, Energy> },
    Divergent(Divergence),
    RuntimeError(RuntimeError),
    /// The scenario could not be set up (missing file, bad model, ...).
    Failed(String),
}

impl Status {
    pub fn from_outcome(outcome: &Outcome) -> Status {
        if let Some(d) = outcome.divergence() {
            return Status::Divergent(d);
        }
        match outcome.primary() {
            Err(e) => Status::RuntimeError(e.clone()),
            Ok(r) => {
                let mut engines = BTreeMap::new();
                for (tag, run) in [("interp", &outcome.interp), ("transform", &outcome.transform)] {
                    if let Some(Ok(r)) = run {
                        engines.insert(tag, r.energy.clone());
                    }
                }
                Status::Ok { result: Box::new(r.clone()), engines }
            }
        }
    }

    pub fn energy(&self) -> Option<&Energy> {
        match self {
            Status::Ok { result, .. } => Some(&result.energy),
            _ => None,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Status::Ok { .. } => "ok",
            Status::Divergent(_) => "DIVERGENT",
            Status::RuntimeError(_) => "FAILED",
            Status::Failed(_) => "FAILED",
        }
    }
}

fn energy_json(e: &Energy) -> Json {
    json!({ "joules": e.to_ratio_string(), "approx": e.to_decimal(DECIMALS) })
}

impl Row {
    pub fn to_json(&self) -> Json {
        let mut row = json!({
            "name": self.name,
            "models": self.models,
            "timing": self.timing,
            "inputs": self.inputs,
            "status": self.status.label(),
        });
        let extra = match &self.status {
            Status::Ok { result, engines } => {
                let b = &result.breakdown;
                json!({
                    "energy": energy_json(&result.energy),
                    "transition": energy_json(&b.transition),
                    "time_draw": energy_json(&b.time_draw),
                    "per_component": b.per_component.iter().map(|(c, e)| (c.clone(), json!({
                        "transition": e.transition.to_ratio_string(),
                        "time_draw": e.time_draw.to_ratio_string(),
                        "total": e.total().to_ratio_string(),
                    }))).collect::<serde_json::Map<_, _>>(),
                    "engines": engines.iter().map(|(k, e)| (k.to_string(), json!(e.to_ratio_string()))).collect::<serde_json::Map<_, _>>(),
                    "value": result.value.to_string(),
                    "final_components": result.components,
                    "final_globals": result.globals.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
                })
            }
            Status::Divergent(d) => json!({ "divergence": {
                "field": d.field, "interp": d.interp, "transform": d.transform, "trace_prefix": d.trace_prefix,
            }}),
            Status::RuntimeError(e) => json!({ "error": { "kind": e.kind(), "message": e.to_string() } }),
            Status::Failed(message) => json!({ "error": { "kind": "Load", "message": message } }),
        };
        if let (Json::Object(row), Json::Object(extra)) = (&mut row, extra) {
            row.extend(extra);
        }
        row
    }

    fn describe(&self, out: &mut String) {
        let inputs = self.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "scenario  {}", self.name);
        let _ = writeln!(out, "models    {}", self.models.join(", "));
        let _ = writeln!(out, "timing    {}", self.timing.as_deref().unwrap_or("(all zero)"));
        if !inputs.is_empty() {
            let _ = writeln!(out, "inputs    {inputs}");
        }
        match &self.status {
            Status::Ok { result, engines } => {
                let b = &result.breakdown;
                let e = &result.energy;
                let _ = writeln!(out, "energy    {} J (~{})", e.to_ratio_string(), e.to_decimal(DECIMALS));
                let _ = writeln!(out, "  transition {} J", b.transition.to_ratio_string());
                let _ = writeln!(out, "  time-draw  {} J", b.time_draw.to_ratio_string());
                for (c, ce) in &b.per_component {
                    let _ = writeln!(
                        out,
                        "  {c:<10} {} J (transition {}, time-draw {})",
                        ce.total().to_ratio_string(),
                        ce.transition.to_ratio_string(),
                        ce.time_draw.to_ratio_string()
                    );
                }
                let tags = engines.keys().copied().collect::<Vec<_>>().join(" = ");
                let _ = writeln!(out, "engines   {tags}");
                let _ = writeln!(out, "value     {}", result.value);
                let states = result.components.iter().map(|(c, s)| format!("{c}={s}")).collect::<Vec<_>>().join(" ");
                let _ = writeln!(out, "states    {states}");
            }
            Status::Divergent(d) => {
                let _ = writeln!(out, "DIVERGENT {d}");
            }
            Status::RuntimeError(e) => {
                let _ = writeln!(out, "error     {}: {e}", e.kind());
            }
            Status::Failed(m) => {
                let _ = writeln!(out, "error     {m}");
            }
        }
    }
}

/// Report of `analyze`: one program, one scenario.
pub struct AnalysisReport {
    pub program: String,
    pub engine: Engine,
    pub row: Row,
    pub analysis: Option<Json>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> Json {
        json!({
            "program": self.program,
            "engine": self.engine.to_string(),
            "scenarios": [self.row.to_json()],
            "analysis": self.analysis,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("program   {}\nengine    {}\n", self.program, self.engine);
        self.row.describe(&mut out);
        out
    }
}

/// Report of `compare`: rows ranked by total energy.
pub struct Comparison {
    pub rows: Vec<(String, Row)>,
}

impl Comparison {
    /// Successful rows by ascending energy, ties in input order; failed rows
    /// last in input order.
    pub fn ranked(&self) -> Vec<&(String, Row)> {
        let mut ranked: Vec<&(String, Row)> = self.rows.iter().collect();
        ranked.sort_by(|(_, a), (_, b)| match (a.status.energy(), b.status.energy()) {
            (Some(x), Some(y)) => x.value().cmp(y.value()),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
        ranked
    }

    pub fn to_json(&self) -> Json {
        let ranked = self.ranked();
        let best = ranked.first().filter(|(_, r)| r.status.energy().is_some()).map(|(p, r)| (p.clone(), r.name.clone()));
        json!({
            "ranking": ranked.iter().enumerate().map(|(i, (program, row))| {
                let mut j = row.to_json();
                j["rank"] = json!(i + 1);
                j["program"] = json!(program);
                j["best"] = json!(Some((program.clone(), row.name.clone())) == best);
                j
            }).collect::<Vec<_>>(),
        })
    }

    pub fn to_text(&self) -> String {
        let ranked = self.ranked();
        let width = ranked.iter().map(|(p, r)| p.len() + r.name.len() + 1).max().unwrap_or(0).max(8);
        let mut out = format!("{:>4}  {:<width$}  {:>24}  {:>14}  status\n", "rank", "scenario", "energy (J)", "approx");
        for (i, (program, row)) in ranked.iter().enumerate() {
            let label = format!("{program}:{}", row.name);
            let (exact, approx) = match row.status.energy() {
                Some(e) => (e.to_ratio_string(), e.to_decimal(DECIMALS)),
                None => ("-".to_string(), "-".to_string()),
            };
            let mark = if i == 0 && row.status.energy().is_some() { "  <- lowest" } else { "" };
            let detail = match &row.status {
                Status::Ok { .. } => String::new(),
                Status::Divergent(d) => format!(" ({d})"),
                Status::RuntimeError(e) => format!(" ({}: {e})", e.kind()),
                Status::Failed(m) => format!(" ({m})"),
            };
            let _ = writeln!(
                out,
                "{:>4}  {label:<width$}  {exact:>24}  {approx:>14}  {}{detail}{mark}",
                i + 1,
                row.status.label()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, energy: Option<i64>) -> (String, Row) {
        let status = match energy {
            Some(e) => Status::Ok {
                result: Box::new(RunResult {
                    value: eca_core::value::Value::Unit,
                    locals: Default::default(),
                    globals: Default::default(),
                    components: Default::default(),
                    energy: Energy::from_integer(e),
                    breakdown: Default::default(),
                    trace: vec![],
                }),
                engines: BTreeMap::new(),
            },
            None => Status::Failed("broken".into()),
        };
        ("p".into(), Row { name: name.into(), models: vec![], timing: None, inputs: BTreeMap::new(), status })
    }

    #[test]
    fn ranking_is_stable_and_failures_sink() {
        let c = Comparison { rows: vec![row("a", Some(30)), row("broken", None), row("b", Some(16)), row("c", Some(16))] };
        let names: Vec<_> = c.ranked().iter().map(|(_, r)| r.name.clone()).collect();
        assert_eq!(names, ["b", "c", "a", "broken"]);
        let j = c.to_json();
        assert_eq!(j["ranking"][0]["best"], true);
        assert_eq!(j["ranking"][1]["best"], false);
        assert_eq!(j["ranking"][3]["status"], "FAILED");
    }
}
