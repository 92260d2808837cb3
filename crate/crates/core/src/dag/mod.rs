//! Causal hypotheses as directed acyclic graphs.
//!
//! A [`HypothesisDag`] names one treatment and one outcome (the phenomenon)
//! plus any number of covariates and grouping variables. The submodules
//! answer the questions the evidence framework asks of a hypothesis:
//! which conditional independencies it implies, which adjustment sets
//! de-confound the treatment effect, and which regression formula follows
//! from it.

mod adjustment;
mod diff;
mod dot;
mod formula;
mod implications;
mod parse;
mod separation;

pub use adjustment::{adjustment_sets, is_valid_adjustment, MAX_ADJUSTMENT_CANDIDATES};
pub use diff::{diff_dags, DagDelta};
pub use formula::{derive_formula, Family, FormulaExtras, ModelFormula};
pub use implications::{
    testable_implications, testable_implications_with, ImplicationScope, IndependenceClaim,
};
pub use separation::d_separated;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum VariableKind {
    Continuous,
    Count,
    Binary,
    Ordinal { levels: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Treatment,
    Outcome,
    Covariate,
    Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub kind: VariableKind,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(f64, f64)>,
}

impl VariableDecl {
    pub fn new(name: impl Into<String>, role: Role) -> Self {
        VariableDecl {
            name: name.into(),
            kind: VariableKind::Continuous,
            role,
            bounds: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let VariableKind::Ordinal { levels } = self.kind {
            if levels < 2 {
                return Err(Error::InvalidDag(format!(
                    "ordinal variable '{}' must declare at least 2 levels",
                    self.name
                )));
            }
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo <= hi) {
                return Err(Error::InvalidDag(format!(
                    "bounds of '{}' are empty: [{lo}, {hi}]",
                    self.name
                )));
            }
            if self.kind == VariableKind::Count
                && (lo < 0.0 || lo.fract() != 0.0 || (hi.is_finite() && hi.fract() != 0.0))
            {
                return Err(Error::InvalidDag(format!(
                    "count bounds of '{}' must be non-negative integers",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// A validated causal hypothesis.
///
/// Nodes keep their declaration order (for faithful serialization); every
/// query result is sorted by node name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisDag {
    pub id: String,
    nodes: Vec<VariableDecl>,
    edges: BTreeSet<(String, String)>,
    treatment: String,
    outcome: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    annotations: BTreeMap<String, String>,
}

impl HypothesisDag {
    /// Builds and validates a hypothesis. Treatment and outcome are taken
    /// from the node roles.
    pub fn new(
        id: impl Into<String>,
        nodes: Vec<VariableDecl>,
        edges: impl IntoIterator<Item = (String, String)>,
        annotations: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for node in &nodes {
            if !seen.insert(node.name.as_str()) {
                return Err(Error::InvalidDag(format!(
                    "node '{}' declared twice",
                    node.name
                )));
            }
            if !parse::is_valid_name(&node.name) {
                return Err(Error::InvalidDag(format!(
                    "'{}' is not a valid node name",
                    node.name
                )));
            }
            node.validate()?;
        }
        let pick = |role: Role, label: &str| -> Result<String> {
            let marked: Vec<_> = nodes.iter().filter(|n| n.role == role).collect();
            match marked.as_slice() {
                [one] => Ok(one.name.clone()),
                [] => Err(Error::InvalidDag(format!("no {label} marked"))),
                _ => Err(Error::InvalidDag(format!(
                    "more than one {label} marked (multiple {label}s are not supported)"
                ))),
            }
        };
        let treatment = pick(Role::Treatment, "treatment")?;
        let outcome = pick(Role::Outcome, "outcome")?;

        let mut edge_set = BTreeSet::new();
        for (from, to) in edges {
            for end in [&from, &to] {
                if !seen.contains(end.as_str()) {
                    return Err(Error::InvalidDag(format!(
                        "edge {from} -> {to} references undeclared node '{end}'"
                    )));
                }
            }
            if from == to {
                return Err(Error::InvalidDag(format!("self-loop on '{from}'")));
            }
            if !edge_set.insert((from.clone(), to.clone())) {
                return Err(Error::InvalidDag(format!("duplicate edge {from} -> {to}")));
            }
        }

        let dag = HypothesisDag {
            id: id.into(),
            nodes,
            edges: edge_set,
            treatment,
            outcome,
            annotations,
        };
        if let Some(node) = dag.graph().find_cycle() {
            return Err(Error::Cycle(dag.graph().names[node].clone()));
        }
        Ok(dag)
    }

    pub fn parse(id: impl Into<String>, text: &str) -> Result<Self> {
        parse::parse_dag(id.into(), text)
    }

    /// Renders the hypothesis in the DAG DSL.
    pub fn to_dsl(&self) -> String {
        parse::serialize_dag(self)
    }

    pub fn to_dot(&self) -> String {
        dot::dag_to_dot(self)
    }

    pub fn treatment(&self) -> &str {
        &self.treatment
    }

    pub fn outcome(&self) -> &str {
        &self.outcome
    }

    /// The (treatment, outcome) pair this hypothesis is about.
    pub fn phenomenon(&self) -> (String, String) {
        (self.treatment.clone(), self.outcome.clone())
    }

    pub fn nodes(&self) -> &[VariableDecl] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Option<&VariableDecl> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.node(name).is_some()
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn annotations(&self) -> &BTreeMap<String, String> {
        &self.annotations
    }

    /// Node names sorted lexicographically.
    pub fn node_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.nodes.iter().map(|n| n.name.clone()).collect();
        names.sort();
        names
    }

    pub fn group_nodes(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .nodes
            .iter()
            .filter(|n| n.role == Role::Group)
            .map(|n| n.name.clone())
            .collect();
        names.sort();
        names
    }

    pub fn parents(&self, name: &str) -> Vec<String> {
        self.edges
            .iter()
            .filter(|(_, to)| to == name)
            .map(|(from, _)| from.clone())
            .collect()
    }

    pub fn descendants(&self, name: &str) -> Result<BTreeSet<String>> {
        let graph = self.graph();
        let idx = graph.index(name)?;
        Ok(graph
            .descendants(idx)
            .into_iter()
            .map(|i| graph.names[i].clone())
            .collect())
    }

    pub(crate) fn graph(&self) -> Graph {
        Graph::from_dag(self)
    }
}

impl fmt::Display for HypothesisDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

/// Index-based adjacency view used by the graph algorithms. Node indices
/// follow lexicographic name order.
#[derive(Debug, Clone)]
pub(crate) struct Graph {
    pub names: Vec<String>,
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl Graph {
    fn from_dag(dag: &HypothesisDag) -> Self {
        let names = dag.node_names();
        let n = names.len();
        let mut graph = Graph {
            names,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        };
        for (from, to) in &dag.edges {
            let a = graph.names.binary_search(from).expect("validated edge");
            let b = graph.names.binary_search(to).expect("validated edge");
            graph.children[a].push(b);
            graph.parents[b].push(a);
        }
        graph
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .map_err(|_| Error::UnknownNode(name.to_string()))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.children[a].contains(&b)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    /// Strict descendants of `start`.
    pub fn descendants(&self, start: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut stack = self.children[start].clone();
        while let Some(v) = stack.pop() {
            if out.insert(v) {
                stack.extend(self.children[v].iter().copied());
            }
        }
        out
    }

    /// Returns some node on a directed cycle, if one exists.
    fn find_cycle(&self) -> Option<usize> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.len()];
        for root in 0..self.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.children[v].len() {
                    let w = self.children[v][*next];
                    *next += 1;
                    match state[w] {
                        0 => {
                            state[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => return Some(w),
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                }
            }
        }
        None
    }
}
