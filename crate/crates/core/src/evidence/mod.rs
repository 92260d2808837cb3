//! Evidence tuples E(h, d, m) and their typed evolution.

mod graph;
mod store;

pub use graph::{Assessment, EdgeAssessment, EvolutionEdge, EvolutionGraph, Frontier, Trigger, ValidateOptions};
pub use store::{EvidenceContext, MemoryStore};

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dag::HypothesisDag;
use crate::error::{Error, Result};
use crate::stats::Conclusion;

/// The (treatment, outcome) pair a body of evidence is about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Phenomenon {
    pub treatment: String,
    pub outcome: String,
}

impl Phenomenon {
    pub fn of(dag: &HypothesisDag) -> Self {
        Phenomenon { treatment: dag.treatment().to_string(), outcome: dag.outcome().to_string() }
    }
}

impl fmt::Display for Phenomenon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.treatment, self.outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub id: String,
    pub hypothesis_id: String,
    pub dataset_id: String,
    pub method_id: String,
    pub phenomenon: Phenomenon,
    pub conclusion: Conclusion,
    pub created_at: DateTime<Utc>,
    /// Free text, usually a study citation.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
}

impl Evidence {
    pub fn new(
        id: impl Into<String>,
        hypothesis: &HypothesisDag,
        dataset_id: impl Into<String>,
        method_id: impl Into<String>,
        conclusion: Conclusion,
    ) -> Self {
        Evidence {
            id: id.into(),
            hypothesis_id: hypothesis.id.clone(),
            dataset_id: dataset_id.into(),
            method_id: method_id.into(),
            phenomenon: Phenomenon::of(hypothesis),
            conclusion,
            created_at: Utc::now(),
            provenance: String::new(),
        }
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn with_created_at(mut self, at: DateTime<Utc>) -> Self {
        self.created_at = at;
        self
    }

    pub fn tuple(&self) -> (&str, &str, &str) {
        (&self.hypothesis_id, &self.dataset_id, &self.method_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionType {
    Replication,
    Revision,
    Reanalysis,
}

impl EvolutionType {
    pub fn as_str(self) -> &'static str {
        match self {
            EvolutionType::Replication => "replication",
            EvolutionType::Revision => "revision",
            EvolutionType::Reanalysis => "reanalysis",
        }
    }

    /// Node fill color in DOT exports.
    pub fn color(self) -> &'static str {
        match self {
            EvolutionType::Replication => "yellow",
            EvolutionType::Revision => "blue",
            EvolutionType::Reanalysis => "red",
        }
    }
}

impl fmt::Display for EvolutionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) fn join_types(types: &BTreeSet<EvolutionType>) -> String {
    // revision first reads more naturally: "revision + reanalysis"
    let order = [EvolutionType::Revision, EvolutionType::Replication, EvolutionType::Reanalysis];
    order.iter().filter(|t| types.contains(t)).map(|t| t.as_str()).collect::<Vec<_>>().join(" + ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub types: BTreeSet<EvolutionType>,
    pub conflated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join_types(&self.types))?;
        if self.conflated {
            f.write_str(" (conflated)")?;
        }
        Ok(())
    }
}

/// Types of the step from `parent` to `child`: one per differing component.
pub fn classify_evolution(parent: &Evidence, child: &Evidence) -> Result<Classification> {
    if parent.phenomenon != child.phenomenon {
        return Err(Error::Incommensurable(parent.phenomenon.to_string(), child.phenomenon.to_string()));
    }
    let mut types = BTreeSet::new();
    if parent.hypothesis_id != child.hypothesis_id {
        types.insert(EvolutionType::Revision);
    }
    if parent.dataset_id != child.dataset_id {
        types.insert(EvolutionType::Replication);
    }
    if parent.method_id != child.method_id {
        types.insert(EvolutionType::Reanalysis);
    }
    if types.is_empty() {
        return Err(Error::Duplicate(format!(
            "{} and {} share hypothesis, dataset and method",
            parent.id, child.id
        )));
    }
    let conflated = types.len() > 1;
    let advisory = conflated.then(|| {
        format!(
            "{} -> {} changes several components at once ({}); decompose it into single-type steps so each change can be validated on its own",
            parent.id,
            child.id,
            join_types(&types)
        )
    });
    Ok(Classification { types, conflated, advisory })
}
