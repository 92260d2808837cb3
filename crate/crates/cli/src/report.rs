//! Human and JSON renderings of command results.

use std::path::Path;

use evigraph_core::dag::{HypothesisDag, IndependenceClaim};
use evigraph_core::data::DatasetTable;
use evigraph_core::evidence::{Classification, Evidence, EvolutionEdge, EvolutionGraph, Frontier};
use evigraph_core::scenario::Scenario;
use evigraph_core::synthesis::{CombinedP, PooledEffect};
use evigraph_core::Error;
use serde_json::{json, Value};

pub struct Output {
    pub json: bool,
}

fn set(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

impl Output {
    fn emit(&self, value: Value, human: impl FnOnce() -> String) {
        if self.json {
            println!("{value}");
        } else {
            let text = human();
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }

    pub fn message(&self, value: &str, human: &str) {
        self.emit(json!({ "result": value }), || human.to_string());
    }

    pub fn raw(&self, key: &str, text: &str) {
        self.emit(json!({ key: text }), || text.to_string());
    }

    pub fn hypothesis(&self, dag: &HypothesisDag) {
        self.emit(
            json!({
                "id": dag.id,
                "treatment": dag.treatment(),
                "outcome": dag.outcome(),
                "nodes": dag.nodes(),
                "edges": dag.edges().iter().collect::<Vec<_>>(),
                "dsl": dag.to_dsl(),
            }),
            || format!("# {}\n{}", dag.id, dag.to_dsl()),
        );
    }

    pub fn implications(&self, claims: &[IndependenceClaim]) {
        self.emit(json!({ "implications": claims }), || {
            if claims.is_empty() {
                "no testable implications".into()
            } else {
                claims.iter().map(|c| format!("{c}\n")).collect()
            }
        });
    }

    pub fn adjustment_sets(&self, sets: &[Vec<String>]) {
        self.emit(json!({ "adjustment_sets": sets }), || {
            if sets.is_empty() {
                "no valid adjustment set".into()
            } else {
                sets.iter().map(|s| format!("{}\n", set(s))).collect()
            }
        });
    }

    pub fn dataset(&self, table: &DatasetTable) {
        self.emit(
            json!({ "id": table.id(), "digest": table.digest(), "rows": table.n_rows(), "columns": table.column_names() }),
            || format!("{}: {} rows, columns {}", table.id(), table.n_rows(), table.column_names().join(", ")),
        );
    }

    pub fn evidence(&self, e: &Evidence, classification: Option<&Classification>) {
        let mut value = serde_json::to_value(e).unwrap_or(Value::Null);
        if let (Some(c), Some(obj)) = (classification, value.as_object_mut()) {
            obj.insert("classification".into(), serde_json::to_value(c).unwrap_or(Value::Null));
        }
        self.emit(value, || {
            let mut s = format!(
                "{} = E({}, {}, {})\n  {}\n",
                e.id,
                e.hypothesis_id,
                e.dataset_id,
                e.method_id,
                e.conclusion.summary()
            );
            if let Some(c) = classification {
                s.push_str(&format!("  evolution: {c}\n"));
                if let Some(a) = &c.advisory {
                    s.push_str(&format!("  advisory: {a}\n"));
                }
            }
            s
        });
    }

    pub fn evidence_list(&self, g: &EvolutionGraph) {
        let rows: Vec<Value> = g
            .evidence
            .values()
            .map(|e| json!({ "id": e.id, "hypothesis": e.hypothesis_id, "dataset": e.dataset_id, "method": e.method_id }))
            .collect();
        self.emit(json!({ "evidence": rows }), || {
            if g.evidence.is_empty() {
                return "no evidence".into();
            }
            g.evidence
                .values()
                .map(|e| format!("{}\t({}, {}, {})\t{}\n", e.id, e.hypothesis_id, e.dataset_id, e.method_id, e.conclusion.summary()))
                .collect()
        });
    }

    pub fn classification(&self, from: &str, to: &str, c: &Classification) {
        let mut value = serde_json::to_value(c).unwrap_or(Value::Null);
        if let Some(obj) = value.as_object_mut() {
            obj.insert("from".into(), json!(from));
            obj.insert("to".into(), json!(to));
        }
        self.emit(value, || match &c.advisory {
            Some(a) => format!("{c}\nadvisory: {a}"),
            None => c.to_string(),
        });
    }

    pub fn edge(&self, e: &EvolutionEdge) {
        self.emit(serde_json::to_value(e).unwrap_or(Value::Null), || {
            let mut s = format!("{} -> {}: {}\n", e.from, e.to, e.label());
            if let Some(a) = &e.assessment.agreement {
                s.push_str(&format!(
                    "  replication: {} ({:?})\n",
                    if a.agrees { "agrees" } else { "disagrees" },
                    a.basis
                ));
            }
            if let Some(r) = &e.assessment.revision {
                s.push_str(&format!(
                    "  revision ({:?}, {:?}): winner {} (delta {:.2})\n",
                    r.purpose, r.criterion, r.winner, r.delta
                ));
                for n in &r.notes {
                    s.push_str(&format!("    {n}\n"));
                }
            }
            if let Some(r) = &e.assessment.reanalysis {
                s.push_str(&format!("  reanalysis: {} -> {}\n", r.old_method, r.new_method));
                for n in &r.notes {
                    s.push_str(&format!("    {n}\n"));
                }
            }
            if e.conflation_override {
                s.push_str("  conflated edge accepted by override\n");
            }
            s
        });
    }

    pub fn frontier(&self, f: &Frontier) {
        self.emit(serde_json::to_value(f).unwrap_or(Value::Null), || {
            let mut s = format!(
                "hypothesis: {}\nmethod: {}\nsupported by: {}\nrequired measurements: {}\n",
                f.best_hypothesis_id,
                f.best_method_id,
                if f.supporting_evidence.is_empty() { "none yet".to_string() } else { f.supporting_evidence.join(", ") },
                set(&f.required_measurements)
            );
            if f.provisional {
                s.push_str("status: provisional\n");
            }
            for n in &f.notes {
                s.push_str(&format!("note: {n}\n"));
            }
            s
        });
    }

    pub fn simulation(&self, s: &Scenario, csv: &Path) {
        self.emit(
            json!({ "dataset_id": s.data.id(), "csv": csv.display().to_string(), "rows": s.data.n_rows(), "truth": s.truth }),
            || {
                format!(
                    "{} ({} rows) -> {}\ntrue ACE: {:.4} (probability), {:.4} (count)",
                    s.data.id(),
                    s.data.n_rows(),
                    csv.display(),
                    s.truth.ace_probability,
                    s.truth.ace_count
                )
            },
        );
    }

    pub fn combined(&self, c: &CombinedP) {
        self.emit(serde_json::to_value(c).unwrap_or(Value::Null), || {
            format!("{:?}: statistic {:.4}, p = {:.4}", c.method, c.statistic, c.p)
        });
    }

    pub fn pooled(&self, p: &PooledEffect) {
        self.emit(serde_json::to_value(p).unwrap_or(Value::Null), || {
            format!(
                "{:?}: {:.4} (se {:.4}), ci [{:.4}, {:.4}], tau2 {:.4}",
                p.model, p.estimate, p.std_error, p.ci.lower, p.ci.upper, p.tau2
            )
        });
    }

    pub fn error(&self, e: &Error, code: u8) {
        if self.json {
            let message = e.to_string().replace('\n', " ");
            println!("{}", json!({ "error": e.kind(), "message": message, "exit_code": code }));
        } else {
            eprintln!("error: {e}");
        }
    }
}
