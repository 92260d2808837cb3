//! On-disk evidence repository.
//!
//! ```text
//! root/
//!   hypotheses/<id>.dag
//!   datasets/<id>.csv + <id>.json
//!   methods/<id>.json
//!   evidence/<id>.json
//!   graph.json
//!   .lock
//! ```
//!
//! Writers hold an advisory lock file; every file is written to a temporary
//! sibling and renamed into place, so a killed write never leaves a torn file.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::dag::HypothesisDag;
use crate::data::{id_from_digest, digest_bytes, DatasetMeta, DatasetTable};
use crate::error::{Error, Result};
use crate::evidence::{Classification, Evidence, EvidenceContext, EvolutionGraph, Phenomenon};
use crate::stats::{run_method, MethodSpec};

const DIRS: [&str; 4] = ["hypotheses", "datasets", "methods", "evidence"];
const GRAPH: &str = "graph.json";
const LOCK: &str = ".lock";

/// Writes `bytes` to `path` via a temporary file and an atomic rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Held while writing; removes the lock file on drop.
#[derive(Debug)]
pub struct RepoLock {
    path: PathBuf,
}

impl Drop for RepoLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn valid_id(kind: &str, id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("invalid {kind} id '{id}'")))
    }
}

#[derive(Debug, Clone)]
pub struct Repo {
    root: PathBuf,
}

impl Repo {
    /// Creates the layout; fails if a repository already exists there.
    pub fn init(root: impl Into<PathBuf>) -> Result<Repo> {
        let root = root.into();
        if root.join(GRAPH).exists() {
            return Err(Error::Repo(format!("{} is already a repository", root.display())));
        }
        for d in DIRS {
            fs::create_dir_all(root.join(d))?;
        }
        let repo = Repo { root };
        repo.save_graph(&EvolutionGraph::new())?;
        Ok(repo)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Repo> {
        let root = root.into();
        if !root.join(GRAPH).is_file() {
            return Err(Error::Repo(format!(
                "{} is not a repository (run `evigraph init`)",
                root.display()
            )));
        }
        Ok(Repo { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Takes the advisory writer lock.
    pub fn lock(&self) -> Result<RepoLock> {
        let path = self.root.join(LOCK);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RepoLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                let holder = fs::read_to_string(&path).unwrap_or_default();
                Err(Error::Repo(format!(
                    "repository is locked by process {}; remove {} if that process is gone",
                    holder.trim(),
                    path.display()
                )))
            }
            Err(e) => Err(e.into()),
        }
    }

    fn path(&self, dir: &str, id: &str, ext: &str) -> PathBuf {
        self.root.join(dir).join(format!("{id}.{ext}"))
    }

    fn read(&self, kind: &'static str, path: &Path, id: &str) -> Result<String> {
        fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound { kind, id: id.to_string() },
            _ => e.into(),
        })
    }

    /// Stores a hypothesis; re-adding identical text is a no-op.
    pub fn add_hypothesis(&self, id: &str, text: &str) -> Result<HypothesisDag> {
        valid_id("hypothesis", id)?;
        let dag = HypothesisDag::parse(id, text)?;
        let path = self.path("hypotheses", id, "dag");
        let _lock = self.lock()?;
        if path.exists() {
            let existing = HypothesisDag::parse(id, &fs::read_to_string(&path)?)?;
            if existing == dag {
                return Ok(dag);
            }
            return Err(Error::Duplicate(format!("hypothesis '{id}' exists with different content")));
        }
        atomic_write(&path, text.as_bytes())?;
        Ok(dag)
    }

    pub fn hypothesis_ids(&self) -> Result<Vec<String>> {
        self.list("hypotheses", "dag")
    }

    fn list(&self, dir: &str, ext: &str) -> Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join(dir))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let p = e.path();
                (p.extension().and_then(|x| x.to_str()) == Some(ext))
                    .then(|| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
                    .flatten()
            })
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Validates and registers a CSV + metadata pair; returns the content id.
    pub fn ingest_dataset(&self, csv: &Path, meta: &Path) -> Result<String> {
        let bytes = fs::read(csv)?;
        let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(meta)?)?;
        self.ingest_bytes(&bytes, meta)
    }

    pub fn ingest_bytes(&self, bytes: &[u8], meta: DatasetMeta) -> Result<String> {
        let digest = digest_bytes(bytes);
        if let Some(declared) = &meta.digest {
            if *declared != digest {
                return Err(Error::InvalidDataset(format!(
                    "metadata digest {declared} does not match the CSV content ({digest})"
                )));
            }
        }
        let table = DatasetTable::from_csv_bytes(bytes, meta)?;
        let id = table.id().to_string();
        let (csv_path, meta_path) = (self.path("datasets", &id, "csv"), self.path("datasets", &id, "json"));
        let _lock = self.lock()?;
        if csv_path.exists() {
            if fs::read(&csv_path)? == bytes {
                return Ok(id);
            }
            return Err(Error::Duplicate(format!("digest collision on {id} with differing content")));
        }
        atomic_write(&csv_path, bytes)?;
        atomic_write(&meta_path, serde_json::to_string_pretty(table.meta())?.as_bytes())?;
        Ok(id)
    }

    pub fn dataset_ids(&self) -> Result<Vec<String>> {
        self.list("datasets", "csv")
    }

    pub fn add_method(&self, spec: &MethodSpec) -> Result<()> {
        valid_id("method", &spec.id)?;
        spec.validate()?;
        let path = self.path("methods", &spec.id, "json");
        let json = serde_json::to_string_pretty(spec)?;
        let _lock = self.lock()?;
        if path.exists() {
            let existing: MethodSpec = serde_json::from_str(&fs::read_to_string(&path)?)?;
            if existing == *spec {
                return Ok(());
            }
            return Err(Error::Duplicate(format!("method '{}' exists with different content", spec.id)));
        }
        atomic_write(&path, json.as_bytes())
    }

    pub fn method_ids(&self) -> Result<Vec<String>> {
        self.list("methods", "json")
    }

    pub fn load_graph(&self) -> Result<EvolutionGraph> {
        EvolutionGraph::from_json(&fs::read_to_string(self.root.join(GRAPH))?)
    }

    pub fn save_graph(&self, graph: &EvolutionGraph) -> Result<()> {
        atomic_write(&self.root.join(GRAPH), graph.to_json()?.as_bytes())
    }

    /// Load-modify-save of the graph under the lock; nothing is written when
    /// `f` fails.
    pub fn update_graph<T>(&self, f: impl FnOnce(&mut EvolutionGraph) -> Result<T>) -> Result<T> {
        let _lock = self.lock()?;
        let mut graph = self.load_graph()?;
        let out = f(&mut graph)?;
        self.save_graph(&graph)?;
        Ok(out)
    }

    /// Adds evidence to the graph (and its own file) under the lock.
    pub fn add_evidence(&self, evidence: Evidence, parent: Option<&str>) -> Result<Classification> {
        valid_id("evidence", &evidence.id)?;
        self.hypothesis(&evidence.hypothesis_id)?;
        if !self.path("datasets", &evidence.dataset_id, "csv").exists() {
            return Err(Error::NotFound { kind: "dataset", id: evidence.dataset_id.clone() });
        }
        self.method(&evidence.method_id)?;
        let _lock = self.lock()?;
        let mut graph = self.load_graph()?;
        let json = serde_json::to_string_pretty(&evidence)?;
        let path = self.path("evidence", &evidence.id, "json");
        let classification = graph.add_evidence(evidence, parent)?;
        atomic_write(&path, json.as_bytes())?;
        self.save_graph(&graph)?;
        Ok(classification)
    }

    /// Runs method `m` on dataset `d` under hypothesis `h` and records the
    /// result; `seed` overrides the method's seeds.
    pub fn run_evidence(
        &self,
        id: Option<&str>,
        h: &str,
        d: &str,
        m: &str,
        parent: Option<&str>,
        seed: Option<u64>,
    ) -> Result<(Evidence, Classification)> {
        let dag = self.hypothesis(h)?;
        let data = self.dataset(d)?;
        let mut spec = self.method(m)?;
        if let Some(seed) = seed {
            spec = spec.with_seed_override(seed);
        }
        let graph = self.load_graph()?;
        if let Some(key) = &graph.phenomenon {
            if *key != Phenomenon::of(&dag) {
                return Err(Error::Incommensurable(key.to_string(), Phenomenon::of(&dag).to_string()));
            }
        }
        if let Some(p) = parent {
            graph.get(p)?;
        }
        let id = match id {
            Some(id) => id.to_string(),
            None => (1..).map(|i| format!("e{i}")).find(|c| !graph.evidence.contains_key(c)).expect("unbounded"),
        };
        let conclusion = run_method(&dag, &data, &spec)?;
        let evidence = Evidence::new(id, &dag, d, m, conclusion);
        let classification = self.add_evidence(evidence.clone(), parent)?;
        Ok((evidence, classification))
    }

    /// Checks the repository invariants; returns one line per problem.
    pub fn check(&self) -> Result<Vec<String>> {
        let mut problems = Vec::new();
        for id in self.dataset_ids()? {
            if let Err(e) = self.dataset(&id) {
                problems.push(format!("dataset {id}: {e}"));
            }
        }
        let graph = self.load_graph()?;
        for e in graph.evidence.values() {
            if self.hypothesis(&e.hypothesis_id).is_err() {
                problems.push(format!("evidence {} references missing hypothesis {}", e.id, e.hypothesis_id));
            }
            if !self.path("datasets", &e.dataset_id, "csv").exists() {
                problems.push(format!("evidence {} references missing dataset {}", e.id, e.dataset_id));
            }
            if self.method(&e.method_id).is_err() {
                problems.push(format!("evidence {} references missing method {}", e.id, e.method_id));
            }
        }
        Ok(problems)
    }
}

impl EvidenceContext for Repo {
    fn hypothesis(&self, id: &str) -> Result<HypothesisDag> {
        valid_id("hypothesis", id)?;
        let text = self.read("hypothesis", &self.path("hypotheses", id, "dag"), id)?;
        HypothesisDag::parse(id, &text)
    }

    fn dataset(&self, id: &str) -> Result<DatasetTable> {
        valid_id("dataset", id)?;
        let bytes = fs::read(self.path("datasets", id, "csv")).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound { kind: "dataset", id: id.to_string() },
            _ => e.into(),
        })?;
        let meta: DatasetMeta = serde_json::from_str(&self.read("dataset", &self.path("datasets", id, "json"), id)?)?;
        let digest = digest_bytes(&bytes);
        if meta.digest.as_deref() != Some(digest.as_str()) || id_from_digest(&digest) != id {
            return Err(Error::Repo(format!("dataset {id}: stored digest does not match the CSV content")));
        }
        DatasetTable::from_csv_bytes(&bytes, meta)
    }

    fn method(&self, id: &str) -> Result<MethodSpec> {
        valid_id("method", id)?;
        Ok(serde_json::from_str(&self.read("method", &self.path("methods", id, "json"), id)?)?)
    }
}
