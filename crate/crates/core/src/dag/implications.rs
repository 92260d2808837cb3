use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::separation::separated_mask;
use super::HypothesisDag;

/// `a ⟂ b | given`, as implied (or denied) by a hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndependenceClaim {
    pub a: String,
    pub b: String,
    pub given: Vec<String>,
    pub expected_independent: bool,
}

impl IndependenceClaim {
    /// Builds a claim with `a < b` and a sorted conditioning set.
    pub fn new(a: &str, b: &str, given: &[&str]) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let mut given: Vec<String> = given.iter().map(|s| s.to_string()).collect();
        given.sort();
        IndependenceClaim {
            a: a.to_string(),
            b: b.to_string(),
            given,
            expected_independent: true,
        }
    }

    fn sort_key(&self) -> (usize, &[String], &str, &str) {
        (self.given.len(), &self.given, &self.a, &self.b)
    }
}

impl fmt::Display for IndependenceClaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = if self.expected_independent { "⟂" } else { "not ⟂" };
        write!(f, "{} {} {}", self.a, rel, self.b)?;
        if !self.given.is_empty() {
            write!(f, " | {}", self.given.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicationScope {
    /// Every pair and every conditioning set of at most `max_given` nodes.
    Exhaustive { max_given: usize },
    /// Each node independent of its non-descendant non-parents given its parents.
    LocalMarkov,
}

impl ImplicationScope {
    /// Exhaustive for up to 8 nodes, local Markov beyond.
    pub fn default_for(dag: &HypothesisDag) -> Self {
        let n = dag.nodes().len();
        if n <= 8 {
            ImplicationScope::Exhaustive {
                max_given: n.saturating_sub(2),
            }
        } else {
            ImplicationScope::LocalMarkov
        }
    }
}

pub fn testable_implications(dag: &HypothesisDag) -> Vec<IndependenceClaim> {
    testable_implications_with(dag, ImplicationScope::default_for(dag))
}

/// Independence claims implied by d-separation, ordered by conditioning-set
/// size, then conditioning set, then pair.
pub fn testable_implications_with(
    dag: &HypothesisDag,
    scope: ImplicationScope,
) -> Vec<IndependenceClaim> {
    let graph = dag.graph();
    let n = graph.len();
    let mut claims = BTreeSet::new();
    match scope {
        ImplicationScope::Exhaustive { max_given } => {
            let mut z = vec![false; n];
            for a in 0..n {
                for b in a + 1..n {
                    if graph.adjacent(a, b) {
                        continue;
                    }
                    let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
                    for mask in 0u64..(1u64 << rest.len()) {
                        if mask.count_ones() as usize > max_given {
                            continue;
                        }
                        z.iter_mut().for_each(|f| *f = false);
                        let mut given = Vec::new();
                        for (bit, &v) in rest.iter().enumerate() {
                            if mask & (1 << bit) != 0 {
                                z[v] = true;
                                given.push(graph.names[v].as_str());
                            }
                        }
                        if separated_mask(&graph, a, b, &z) {
                            claims.insert(IndependenceClaim::new(
                                &graph.names[a],
                                &graph.names[b],
                                &given,
                            ));
                        }
                    }
                }
            }
        }
        ImplicationScope::LocalMarkov => {
            for v in 0..n {
                let descendants = graph.descendants(v);
                let parents: Vec<&str> = graph.parents[v]
                    .iter()
                    .map(|&p| graph.names[p].as_str())
                    .collect();
                for w in 0..n {
                    if w == v || descendants.contains(&w) || graph.parents[v].contains(&w) {
                        continue;
                    }
                    claims.insert(IndependenceClaim::new(
                        &graph.names[v],
                        &graph.names[w],
                        &parents,
                    ));
                }
            }
        }
    }
    let mut out: Vec<IndependenceClaim> = claims.into_iter().collect();
    out.sort_by(|l, r| l.sort_key().cmp(&r.sort_key()));
    out
}
