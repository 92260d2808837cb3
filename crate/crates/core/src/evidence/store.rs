use std::collections::BTreeMap;

use crate::dag::HypothesisDag;
use crate::data::DatasetTable;
use crate::error::{Error, Result};
use crate::stats::MethodSpec;

/// Read access to the artifacts evidence refers to.
pub trait EvidenceContext {
    fn hypothesis(&self, id: &str) -> Result<HypothesisDag>;
    fn dataset(&self, id: &str) -> Result<DatasetTable>;
    fn method(&self, id: &str) -> Result<MethodSpec>;
}

/// In-memory artifact store; used by fixtures and tests.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    pub hypotheses: BTreeMap<String, HypothesisDag>,
    pub datasets: BTreeMap<String, DatasetTable>,
    pub methods: BTreeMap<String, MethodSpec>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_hypothesis(&mut self, dag: HypothesisDag) -> &mut Self {
        self.hypotheses.insert(dag.id.clone(), dag);
        self
    }

    /// Registers under the table's own id.
    pub fn add_dataset(&mut self, table: DatasetTable) -> &mut Self {
        self.datasets.insert(table.id().to_string(), table);
        self
    }

    pub fn add_method(&mut self, spec: MethodSpec) -> &mut Self {
        self.methods.insert(spec.id.clone(), spec);
        self
    }
}

fn lookup<T: Clone>(map: &BTreeMap<String, T>, kind: &'static str, id: &str) -> Result<T> {
    map.get(id).cloned().ok_or_else(|| Error::NotFound { kind, id: id.to_string() })
}

impl EvidenceContext for MemoryStore {
    fn hypothesis(&self, id: &str) -> Result<HypothesisDag> {
        lookup(&self.hypotheses, "hypothesis", id)
    }

    fn dataset(&self, id: &str) -> Result<DatasetTable> {
        lookup(&self.datasets, "dataset", id)
    }

    fn method(&self, id: &str) -> Result<MethodSpec> {
        lookup(&self.methods, "method", id)
    }
}
