use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{classify_evolution, join_types, Classification, Evidence, EvidenceContext, EvolutionType, Phenomenon};
use crate::dag::adjustment_sets;
use crate::error::{Error, Result};
use crate::synthesis::{
    check_agreement, evaluate_revision, record_reanalysis_unchecked, schema_version, AgreementVerdict, Rationale,
    ReanalysisRecord, RevisionConfig, RevisionInput, RevisionPurpose, RevisionVerdict, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    DisagreeingReplication,
    QualitativeEvidence,
    Methodological,
}

/// One assessment slot per evolution type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeAssessment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agreement: Option<AgreementVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<RevisionVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reanalysis: Option<ReanalysisRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assessment {
    Agreement(AgreementVerdict),
    Revision(RevisionVerdict),
    Reanalysis(ReanalysisRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionEdge {
    pub from: String,
    pub to: String,
    pub types: BTreeSet<EvolutionType>,
    pub conflated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<RevisionPurpose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<Trigger>,
    #[serde(default)]
    pub assessment: EdgeAssessment,
    /// Set when a conflated edge was validated without decomposition.
    #[serde(default)]
    pub conflation_override: bool,
}

impl EvolutionEdge {
    /// Every type carries its assessment.
    pub fn is_validated(&self) -> bool {
        self.types.iter().all(|t| match t {
            EvolutionType::Replication => self.assessment.agreement.is_some(),
            EvolutionType::Revision => self.assessment.revision.is_some(),
            EvolutionType::Reanalysis => self.assessment.reanalysis.is_some(),
        })
    }

    pub fn has(&self, t: EvolutionType) -> bool {
        self.types.contains(&t)
    }

    pub fn label(&self) -> String {
        let mut s = join_types(&self.types);
        if self.conflated {
            s.push_str(" (conflated)");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    pub alpha: f64,
    pub revision: RevisionConfig,
    /// Accept a conflated edge without decomposition (recorded on the edge).
    pub allow_conflated: bool,
    pub rationale: Rationale,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            alpha: 0.05,
            revision: RevisionConfig::default(),
            allow_conflated: false,
            rationale: Rationale::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub best_hypothesis_id: String,
    pub best_method_id: String,
    pub supporting_evidence: Vec<String>,
    pub required_measurements: Vec<String>,
    /// Some edges lack assessments.
    pub provisional: bool,
    /// Hypotheses not beaten by any other, in age order.
    pub hypothesis_candidates: Vec<String>,
    /// Methods not superseded by a justified reanalysis, in age order.
    pub method_candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionGraph {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phenomenon: Option<Phenomenon>,
    pub evidence: BTreeMap<String, Evidence>,
    pub edges: Vec<EvolutionEdge>,
}

impl Default for EvolutionGraph {
    fn default() -> Self {
        EvolutionGraph { schema_version: SCHEMA_VERSION, phenomenon: None, evidence: BTreeMap::new(), edges: Vec::new() }
    }
}

impl EvolutionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.evidence.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&Evidence> {
        self.evidence.get(id).ok_or_else(|| Error::NotFound { kind: "evidence", id: id.to_string() })
    }

    pub fn edge(&self, from: &str, to: &str) -> Result<&EvolutionEdge> {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to)
            .ok_or_else(|| Error::NotFound { kind: "edge", id: format!("{from} -> {to}") })
    }

    fn edge_mut(&mut self, from: &str, to: &str) -> Result<&mut EvolutionEdge> {
        self.edges
            .iter_mut()
            .find(|e| e.from == from && e.to == to)
            .ok_or_else(|| Error::NotFound { kind: "edge", id: format!("{from} -> {to}") })
    }

    /// Evidence without incoming edges.
    pub fn roots(&self) -> Vec<&str> {
        let targets: BTreeSet<&str> = self.edges.iter().map(|e| e.to.as_str()).collect();
        self.evidence.keys().map(String::as_str).filter(|id| !targets.contains(id)).collect()
    }

    /// Appends a node, and an unvalidated edge from `parent` when given.
    pub fn add_evidence(&mut self, evidence: Evidence, parent: Option<&str>) -> Result<Classification> {
        if self.evidence.contains_key(&evidence.id) {
            return Err(Error::Duplicate(format!("evidence id '{}' already in the graph", evidence.id)));
        }
        if let Some(key) = &self.phenomenon {
            if *key != evidence.phenomenon {
                return Err(Error::Incommensurable(key.to_string(), evidence.phenomenon.to_string()));
            }
        }
        let classification = match parent {
            Some(p) => classify_evolution(self.get(p)?, &evidence)?,
            None => Classification { types: BTreeSet::new(), conflated: false, advisory: None },
        };
        self.phenomenon.get_or_insert_with(|| evidence.phenomenon.clone());
        let id = evidence.id.clone();
        self.evidence.insert(id.clone(), evidence);
        if let Some(p) = parent {
            self.push_edge(p, &id, &classification);
        }
        Ok(classification)
    }

    /// Links two existing nodes (e.g. a second parent).
    pub fn add_edge(&mut self, from: &str, to: &str) -> Result<Classification> {
        let classification = classify_evolution(self.get(from)?, self.get(to)?)?;
        if self.edge(from, to).is_ok() {
            return Err(Error::Duplicate(format!("edge {from} -> {to}")));
        }
        if from == to || self.reaches(to, from) {
            return Err(Error::GraphCycle(format!("{from} -> {to}")));
        }
        self.push_edge(from, to, &classification);
        Ok(classification)
    }

    fn push_edge(&mut self, from: &str, to: &str, c: &Classification) {
        self.edges.push(EvolutionEdge {
            from: from.to_string(),
            to: to.to_string(),
            types: c.types.clone(),
            conflated: c.conflated,
            purpose: None,
            trigger: None,
            assessment: EdgeAssessment::default(),
            conflation_override: false,
        });
    }

    fn reaches(&self, start: &str, target: &str) -> bool {
        let mut stack = vec![start];
        let mut seen = BTreeSet::new();
        while let Some(node) = stack.pop() {
            if node == target {
                return true;
            }
            if seen.insert(node) {
                stack.extend(self.edges.iter().filter(|e| e.from == node).map(|e| e.to.as_str()));
            }
        }
        false
    }

    pub fn set_purpose(&mut self, from: &str, to: &str, purpose: RevisionPurpose) -> Result<()> {
        let edge = self.edge_mut(from, to)?;
        if !edge.has(EvolutionType::Revision) {
            return Err(Error::InvalidInput(format!("{from} -> {to} is not a revision")));
        }
        edge.purpose = Some(purpose);
        Ok(())
    }

    pub fn set_trigger(&mut self, from: &str, to: &str, trigger: Trigger) -> Result<()> {
        self.edge_mut(from, to)?.trigger = Some(trigger);
        Ok(())
    }

    /// Stores a precomputed assessment (e.g. replayed from a publication).
    pub fn attach_assessment(&mut self, from: &str, to: &str, assessment: Assessment) -> Result<()> {
        let edge = self.edge_mut(from, to)?;
        let wrong = |t: EvolutionType| Error::InvalidInput(format!("{from} -> {to} is not a {t}"));
        match assessment {
            Assessment::Agreement(v) => {
                if !edge.has(EvolutionType::Replication) {
                    return Err(wrong(EvolutionType::Replication));
                }
                edge.assessment.agreement = Some(v);
            }
            Assessment::Revision(v) => {
                if !edge.has(EvolutionType::Revision) {
                    return Err(wrong(EvolutionType::Revision));
                }
                if !v.criterion.matches(v.purpose) {
                    return Err(Error::InvalidInput(format!(
                        "criterion {:?} cannot decide a {:?} revision",
                        v.criterion, v.purpose
                    )));
                }
                if edge.purpose.is_some_and(|p| p != v.purpose) {
                    return Err(Error::InvalidInput(format!("verdict purpose differs from edge purpose on {from} -> {to}")));
                }
                edge.purpose = Some(v.purpose);
                edge.assessment.revision = Some(v);
            }
            Assessment::Reanalysis(r) => {
                if !edge.has(EvolutionType::Reanalysis) {
                    return Err(wrong(EvolutionType::Reanalysis));
                }
                edge.assessment.reanalysis = Some(r);
            }
        }
        if edge.conflated {
            edge.conflation_override = true;
        }
        Ok(())
    }

    /// Computes one assessment per type of the edge.
    pub fn validate_edge(
        &mut self,
        from: &str,
        to: &str,
        ctx: &dyn EvidenceContext,
        options: &ValidateOptions,
    ) -> Result<&EvolutionEdge> {
        let edge = self.edge(from, to)?.clone();
        if edge.conflated && !options.allow_conflated {
            return Err(Error::Conflated { from: from.into(), to: to.into(), types: join_types(&edge.types) });
        }
        if edge.has(EvolutionType::Revision) && edge.purpose.is_none() {
            return Err(Error::MissingPurpose { from: from.into(), to: to.into() });
        }
        let (parent, child) = (self.get(from)?.clone(), self.get(to)?.clone());
        let mut assessment = EdgeAssessment::default();
        if edge.has(EvolutionType::Replication) {
            assessment.agreement = Some(check_agreement(&parent.conclusion, &child.conclusion, options.alpha)?);
        }
        if let Some(purpose) = edge.purpose.filter(|_| edge.has(EvolutionType::Revision)) {
            let (h_old, h_new) = (ctx.hypothesis(&parent.hypothesis_id)?, ctx.hypothesis(&child.hypothesis_id)?);
            let (m_old, m_new) = (ctx.method(&parent.method_id).ok(), ctx.method(&child.method_id).ok());
            let data = ctx.dataset(&child.dataset_id)?;
            let verdict = evaluate_revision(
                purpose,
                RevisionInput { hypothesis: &h_old, conclusion: &parent.conclusion, method: m_old.as_ref() },
                RevisionInput { hypothesis: &h_new, conclusion: &child.conclusion, method: m_new.as_ref() },
                &data,
                &options.revision,
            )?;
            assessment.revision = Some(verdict);
        }
        if edge.has(EvolutionType::Reanalysis) {
            let mut record = record_reanalysis_unchecked(&parent, &child, options.rationale.clone(), options.alpha);
            if edge.conflated {
                record.notes.push("recorded on a conflated edge; the method change is not isolated".into());
            }
            assessment.reanalysis = Some(record);
        }
        let edge = self.edge_mut(from, to)?;
        edge.assessment = assessment;
        edge.conflation_override = edge.conflated;
        Ok(edge)
    }

    fn created_order(&self) -> Vec<&Evidence> {
        let mut nodes: Vec<&Evidence> = self.evidence.values().collect();
        nodes.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        nodes
    }

    /// Ids ordered by first appearance (creation time of the earliest evidence using them).
    fn first_seen(&self, key: impl Fn(&Evidence) -> &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in self.created_order() {
            let k = key(e);
            if !out.iter().any(|o| o == k) {
                out.push(k.to_string());
            }
        }
        out
    }

    /// Hypothesis and method of greatest validity, from the validated edges.
    pub fn frontier(&self, ctx: &dyn EvidenceContext) -> Result<Frontier> {
        if self.evidence.is_empty() {
            return Err(Error::NoEvidence);
        }
        let mut notes = Vec::new();
        let provisional = self.edges.iter().any(|e| !e.is_validated());
        if provisional {
            notes.push("some edges are not validated; the frontier is provisional".to_string());
        }

        // hypotheses: tie verdicts merge classes, decisive verdicts order them
        let hyps = self.first_seen(|e| &e.hypothesis_id);
        let rank = |h: &str| hyps.iter().position(|x| x == h).unwrap_or(usize::MAX);
        let mut class: BTreeMap<String, usize> = hyps.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
        let verdicts: Vec<&RevisionVerdict> =
            self.edges.iter().filter_map(|e| e.assessment.revision.as_ref()).collect();
        for v in verdicts.iter().filter(|v| v.is_tie()) {
            let (Some(&a), Some(&b)) = (class.get(&v.old_hypothesis), class.get(&v.new_hypothesis)) else { continue };
            let (keep, drop) = (a.min(b), a.max(b));
            for c in class.values_mut() {
                if *c == drop {
                    *c = keep;
                }
            }
        }
        let mut beaten: BTreeSet<usize> = BTreeSet::new();
        for v in verdicts.iter().filter(|v| !v.is_tie()) {
            let loser = if v.winner == v.new_hypothesis { &v.old_hypothesis } else { &v.new_hypothesis };
            if let (Some(&w), Some(&l)) = (class.get(&v.winner), class.get(loser)) {
                if w != l {
                    beaten.insert(l);
                }
            }
        }
        let mut hypothesis_candidates: Vec<String> =
            hyps.iter().filter(|h| !beaten.contains(&class[*h])).cloned().collect();
        if hypothesis_candidates.is_empty() {
            notes.push("revision verdicts are cyclic; falling back to all hypotheses".into());
            hypothesis_candidates = hyps.clone();
        }
        hypothesis_candidates.sort_by_key(|h| rank(h));
        let best_h = hypothesis_candidates[0].clone();
        if hypothesis_candidates.len() > 1 {
            let tied: Vec<&String> = hypothesis_candidates.iter().filter(|h| class[*h] == class[&best_h]).collect();
            if tied.len() > 1 {
                notes.push(format!("hypotheses {tied:?} are tied; keeping the earliest, {best_h}"));
            }
            if tied.len() < hypothesis_candidates.len() {
                notes.push(format!(
                    "hypotheses {hypothesis_candidates:?} were never compared; choosing the earliest, {best_h}"
                ));
            }
        }

        // methods: a validated reanalysis supersedes its source method
        let methods = self.first_seen(|e| &e.method_id);
        let mut superseded: BTreeSet<&str> = BTreeSet::new();
        for e in self.edges.iter().filter(|e| e.assessment.reanalysis.is_some()) {
            let (a, b) = (&self.evidence[&e.from].method_id, &self.evidence[&e.to].method_id);
            if a != b {
                superseded.insert(a);
            }
        }
        let used_with_best: Vec<&String> = methods
            .iter()
            .filter(|m| self.evidence.values().any(|e| e.hypothesis_id == best_h && &e.method_id == *m))
            .collect();
        let mut method_candidates: Vec<String> =
            used_with_best.iter().filter(|m| !superseded.contains(m.as_str())).map(|m| m.to_string()).collect();
        if method_candidates.is_empty() {
            method_candidates = methods.iter().filter(|m| !superseded.contains(m.as_str())).cloned().collect();
            if !method_candidates.is_empty() {
                notes.push(format!(
                    "no unsuperseded method has been applied under {best_h}; the frontier tuple is prospective"
                ));
            } else {
                method_candidates = methods.clone();
            }
        }
        let best_m = method_candidates[0].clone();
        if method_candidates.len() > 1 {
            notes.push(format!("methods {method_candidates:?} are not ordered by any reanalysis; choosing {best_m}"));
        }
        let supporting_evidence: Vec<String> = self
            .created_order()
            .into_iter()
            .filter(|e| e.hypothesis_id == best_h && e.method_id == best_m)
            .map(|e| e.id.clone())
            .collect();

        let required_measurements = match ctx.hypothesis(&best_h) {
            Ok(dag) => {
                let mut set: BTreeSet<String> = adjustment_sets(&dag)
                    .ok()
                    .and_then(|s| s.into_iter().next())
                    .unwrap_or_default()
                    .into_iter()
                    .collect();
                set.extend(dag.group_nodes());
                set.into_iter().collect()
            }
            Err(_) => {
                notes.push(format!("hypothesis {best_h} not available; required measurements unknown"));
                Vec::new()
            }
        };

        Ok(Frontier {
            best_hypothesis_id: best_h,
            best_method_id: best_m,
            supporting_evidence,
            required_measurements,
            provisional,
            hypothesis_candidates,
            method_candidates,
            notes,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let graph: EvolutionGraph = serde_json::from_str(text)?;
        if graph.schema_version != SCHEMA_VERSION {
            return Err(Error::Repo(format!("unsupported graph schema_version {}", graph.schema_version)));
        }
        Ok(graph)
    }

    /// Graphviz rendering; nodes are colored by the types of their incoming
    /// edges (striped when several), originals are white.
    pub fn to_dot(&self) -> String {
        let esc = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        let mut out = String::from("digraph evidence {\n  rankdir=LR;\n  node [shape=box, style=filled];\n");
        for e in self.created_order() {
            let incoming: BTreeSet<EvolutionType> =
                self.edges.iter().filter(|x| x.to == e.id).flat_map(|x| x.types.iter().copied()).collect();
            let colors: Vec<&str> = incoming.iter().map(|t| t.color()).collect();
            let style = match colors.len() {
                0 => "fillcolor=white".to_string(),
                1 => format!("fillcolor={}", colors[0]),
                _ => format!("style=striped, fillcolor=\"{}\"", colors.join(":")),
            };
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"{}\\n({}, {}, {})\", {style}];",
                esc(&e.id),
                esc(&e.id),
                esc(&e.hypothesis_id),
                esc(&e.dataset_id),
                esc(&e.method_id)
            );
        }
        for edge in &self.edges {
            let style = if edge.is_validated() { "" } else { ", style=dashed" };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"{style}];",
                esc(&edge.from),
                esc(&edge.to),
                esc(&edge.label())
            );
        }
        out.push_str("}\n");
        out
    }
}
