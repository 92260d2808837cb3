use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::HypothesisDag;

/// Structural difference between two hypotheses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagDelta {
    pub added_nodes: Vec<String>,
    pub removed_nodes: Vec<String>,
    pub added_edges: Vec<(String, String)>,
    pub removed_edges: Vec<(String, String)>,
    /// Treatment and outcome are identical by name. When false the two
    /// hypotheses are about different phenomena.
    pub phenomenon_preserved: bool,
}

impl DagDelta {
    pub fn is_empty(&self) -> bool {
        self.added_nodes.is_empty()
            && self.removed_nodes.is_empty()
            && self.added_edges.is_empty()
            && self.removed_edges.is_empty()
    }
}

pub fn diff_dags(old: &HypothesisDag, new: &HypothesisDag) -> DagDelta {
    let old_nodes: BTreeSet<String> = old.node_names().into_iter().collect();
    let new_nodes: BTreeSet<String> = new.node_names().into_iter().collect();
    DagDelta {
        added_nodes: new_nodes.difference(&old_nodes).cloned().collect(),
        removed_nodes: old_nodes.difference(&new_nodes).cloned().collect(),
        added_edges: new.edges().difference(old.edges()).cloned().collect(),
        removed_edges: old.edges().difference(new.edges()).cloned().collect(),
        phenomenon_preserved: old.treatment() == new.treatment()
            && old.outcome() == new.outcome(),
    }
}
