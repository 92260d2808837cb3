//! `evigraph`: evidence version control for variance theories.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/validation error,
//! 3 statistical failure.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use evigraph_core::dag::{adjustment_sets, testable_implications, HypothesisDag};
use evigraph_core::data::{DatasetMeta, DatasetTable};
use evigraph_core::evidence::{classify_evolution, EvidenceContext, EvolutionGraph, ValidateOptions};
use evigraph_core::fixtures::Fixture;
use evigraph_core::repo::Repo;
use evigraph_core::scenario::{generate_scenario, ScenarioConfig};
use evigraph_core::stats::MethodSpec;
use evigraph_core::synthesis::{
    combine_pvalues, pool_effects, stouffer_weights, CombineMethod, PoolModel, Rationale, RevisionPurpose,
};
use evigraph_core::{Error, ErrorClass};

use report::Output;

#[derive(Parser)]
#[command(name = "evigraph", version, about = "Evidence version control for variance theories")]
struct Cli {
    /// Repository root.
    #[arg(long, global = true, default_value = ".", env = "EVIGRAPH_REPO")]
    repo: PathBuf,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Replay a bundled evidence graph instead of the repository.
    #[arg(long, global = true, value_enum)]
    fixtures: Option<FixtureName>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Table1,
    Table2,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty repository.
    Init,
    /// Causal hypotheses (DAGs): add, inspect, implications, adjustment sets
    #[command(subcommand)]
    Hypothesis(HypothesisCmd),
    /// Ingest and validate datasets (CSV + column metadata)
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Register analysis methods
    #[command(subcommand)]
    Method(MethodCmd),
    /// Fit, show and list evidence
    #[command(subcommand)]
    Evidence(EvidenceCmd),
    /// Evolution edges between evidence: add, classify, validate
    #[command(subcommand)]
    Edge(EdgeCmd),
    /// Hypothesis and method of greatest validity.
    Frontier,
    /// Graphviz DOT export
    #[command(subcommand)]
    Export(ExportCmd),
    /// Generate a synthetic dataset from a scenario config (JSON).
    Simulate {
        config: PathBuf,
        /// Directory for <name>.csv, <name>.json and <name>.truth.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value = "scenario")]
        name: String,
    },
    /// Combine p-values and pool effect estimates
    #[command(subcommand)]
    Meta(MetaCmd),
}

#[derive(Subcommand)]
enum HypothesisCmd {
    /// Store a DAG file under an id.
    Add { id: String, file: PathBuf },
    /// Print a hypothesis (id or .dag file).
    Show { target: String },
    /// Conditional independences implied by the hypothesis.
    Implications { target: String },
    /// Minimal backdoor adjustment sets.
    AdjustmentSets { target: String },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Validate and register a CSV with its metadata sidecar.
    Add { csv: PathBuf, meta: PathBuf },
    /// Validate without registering.
    Validate { csv: PathBuf, meta: PathBuf },
}

#[derive(Subcommand)]
enum MethodCmd {
    /// Register a method spec (JSON).
    Add { file: PathBuf },
}

#[derive(Subcommand)]
enum EvidenceCmd {
    /// Fit method <m> to dataset <d> under hypothesis <h> and store the result.
    Run {
        h: String,
        d: String,
        m: String,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        parent: Option<String>,
        #[arg(long)]
        provenance: Option<String>,
    },
    Show { id: String },
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum PurposeArg {
    Precision,
    Deconfound,
}

#[derive(Subcommand)]
enum EdgeCmd {
    /// Link two existing evidence nodes.
    Add { from: String, to: String },
    /// Evolution types of the step from <from> to <to>.
    Classify { from: String, to: String },
    /// Attach one assessment per evolution type.
    Validate {
        from: String,
        to: String,
        #[arg(long, value_enum)]
        purpose: Option<PurposeArg>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Accept a conflated edge without decomposition.
        #[arg(long)]
        allow_conflated: bool,
        /// Reanalysis justification.
        #[arg(long)]
        rationale: Option<String>,
        #[arg(long = "cite")]
        citations: Vec<String>,
    },
}

#[derive(Subcommand)]
enum ExportCmd {
    /// DOT for `graph` or a hypothesis (id or .dag file).
    Dot {
        target: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MetaCmd {
    Fisher {
        #[arg(required = true)]
        p: Vec<f64>,
    },
    Stouffer {
        #[arg(required = true)]
        p: Vec<f64>,
        /// Per-study sample sizes (√n weights).
        #[arg(long, num_args = 1..)]
        n: Vec<usize>,
    },
    /// Pool estimate:se pairs.
    Pool {
        #[arg(required = true)]
        studies: Vec<String>,
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 0.95)]
        ci_level: f64,
    },
}

enum Source {
    Repo(Repo),
    Fixture(Box<Fixture>),
}

impl Source {
    fn open(cli: &Cli) -> Result<Source, Error> {
        match cli.fixtures {
            Some(FixtureName::Table1) => Ok(Source::Fixture(Box::new(Fixture::by_name("table1")?))),
            Some(FixtureName::Table2) => Ok(Source::Fixture(Box::new(Fixture::by_name("table2")?))),
            None => Ok(Source::Repo(Repo::open(&cli.repo)?)),
        }
    }

    fn context(&self) -> &dyn EvidenceContext {
        match self {
            Source::Repo(r) => r,
            Source::Fixture(f) => &f.store,
        }
    }

    fn graph(&self) -> Result<EvolutionGraph, Error> {
        match self {
            Source::Repo(r) => r.load_graph(),
            Source::Fixture(f) => Ok(f.graph.clone()),
        }
    }

    fn repo(&self) -> Result<&Repo, Error> {
        match self {
            Source::Repo(r) => Ok(r),
            Source::Fixture(_) => Err(Error::InvalidInput("fixtures are read-only".into())),
        }
    }
}

/// A hypothesis argument is either a .dag file or a stored id.
fn load_hypothesis(cli: &Cli, target: &str) -> Result<HypothesisDag, Error> {
    let path = Path::new(target);
    if path.is_file() {
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or(target);
        return HypothesisDag::parse(id, &std::fs::read_to_string(path)?);
    }
    Source::open(cli)?.context().hypothesis(target)
}

fn seed_override() -> Result<Option<u64>, Error> {
    match std::env::var("EVIGRAPH_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidInput(format!("EVIGRAPH_SEED '{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: &Cli, out: &Output) -> Result<(), Error> {
    match &cli.command {
        Command::Init => {
            let repo = Repo::init(&cli.repo)?;
            out.message("initialized", &format!("initialized empty repository in {}", repo.root().display()));
        }
        Command::Hypothesis(cmd) => match cmd {
            HypothesisCmd::Add { id, file } => {
                let dag = Source::open(cli)?.repo()?.add_hypothesis(id, &std::fs::read_to_string(file)?)?;
                out.hypothesis(&dag);
            }
            HypothesisCmd::Show { target } => out.hypothesis(&load_hypothesis(cli, target)?),
            HypothesisCmd::Implications { target } => {
                let dag = load_hypothesis(cli, target)?;
                out.implications(&testable_implications(&dag));
            }
            HypothesisCmd::AdjustmentSets { target } => {
                let dag = load_hypothesis(cli, target)?;
                out.adjustment_sets(&adjustment_sets(&dag)?);
            }
        },
        Command::Dataset(cmd) => match cmd {
            DatasetCmd::Add { csv, meta } => {
                let id = Source::open(cli)?.repo()?.ingest_dataset(csv, meta)?;
                out.raw("id", &id);
            }
            DatasetCmd::Validate { csv, meta } => {
                let m: DatasetMeta = serde_json::from_str(&std::fs::read_to_string(meta)?)?;
                let table = DatasetTable::from_csv_bytes(&std::fs::read(csv)?, m)?;
                out.dataset(&table);
            }
        },
        Command::Method(MethodCmd::Add { file }) => {
            let spec: MethodSpec = serde_json::from_str(&std::fs::read_to_string(file)?)?;
            Source::open(cli)?.repo()?.add_method(&spec)?;
            out.message(&spec.id, &format!("method {} registered", spec.id));
        }
        Command::Evidence(cmd) => {
            let source = Source::open(cli)?;
            match cmd {
                EvidenceCmd::Run { h, d, m, id, parent, provenance } => {
                    let repo = source.repo()?;
                    let (evidence, classification) =
                        repo.run_evidence(id.as_deref(), h, d, m, parent.as_deref(), seed_override()?)?;
                    if let Some(p) = provenance {
                        repo.update_graph(|g| {
                            if let Some(e) = g.evidence.get_mut(&evidence.id) {
                                e.provenance = p.clone();
                            }
                            Ok(())
                        })?;
                    }
                    out.evidence(&evidence, parent.as_ref().map(|_| &classification));
                }
                EvidenceCmd::Show { id } => out.evidence(source.graph()?.get(id)?, None),
                EvidenceCmd::List => out.evidence_list(&source.graph()?),
            }
        }
        Command::Edge(cmd) => {
            let source = Source::open(cli)?;
            match cmd {
                EdgeCmd::Add { from, to } => {
                    let c = source.repo()?.update_graph(|g| g.add_edge(from, to))?;
                    out.classification(from, to, &c);
                }
                EdgeCmd::Classify { from, to } => {
                    let graph = source.graph()?;
                    out.classification(from, to, &classify_evolution(graph.get(from)?, graph.get(to)?)?);
                }
                EdgeCmd::Validate { from, to, purpose, alpha, allow_conflated, rationale, citations } => {
                    let options = ValidateOptions {
                        alpha: *alpha,
                        allow_conflated: *allow_conflated,
                        rationale: Rationale { text: rationale.clone().unwrap_or_default(), citations: citations.clone() },
                        ..Default::default()
                    };
                    let purpose = purpose.map(|p| match p {
                        PurposeArg::Precision => RevisionPurpose::Precision,
                        PurposeArg::Deconfound => RevisionPurpose::Deconfound,
                    });
                    let apply = |g: &mut EvolutionGraph| {
                        if let Some(p) = purpose {
                            g.set_purpose(from, to, p)?;
                        }
                        g.validate_edge(from, to, source.context(), &options).cloned()
                    };
                    let edge = match &source {
                        Source::Repo(repo) => repo.update_graph(apply)?,
                        Source::Fixture(f) => apply(&mut f.graph.clone())?,
                    };
                    out.edge(&edge);
                }
            }
        }
        Command::Frontier => {
            let source = Source::open(cli)?;
            out.frontier(&source.graph()?.frontier(source.context())?);
        }
        Command::Export(ExportCmd::Dot { target, output }) => {
            let dot = if target == "graph" {
                Source::open(cli)?.graph()?.to_dot()
            } else {
                load_hypothesis(cli, target)?.to_dot()
            };
            match output {
                Some(path) => {
                    std::fs::write(path, &dot)?;
                    out.message(&path.display().to_string(), &format!("wrote {}", path.display()));
                }
                None => out.raw("dot", &dot),
            }
        }
        Command::Simulate { config, out_dir, name } => {
            let cfg: ScenarioConfig = serde_json::from_str(&std::fs::read_to_string(config)?)?;
            let scenario = generate_scenario(&cfg)?;
            std::fs::create_dir_all(out_dir)?;
            let base = out_dir.join(name);
            let with_ext = |ext: &str| base.with_file_name(format!("{name}.{ext}"));
            std::fs::write(with_ext("csv"), scenario.data.to_csv())?;
            std::fs::write(with_ext("json"), serde_json::to_string_pretty(scenario.data.meta())?)?;
            std::fs::write(with_ext("truth.json"), serde_json::to_string_pretty(&scenario.truth)?)?;
            out.simulation(&scenario, &with_ext("csv"));
        }
        Command::Meta(cmd) => match cmd {
            MetaCmd::Fisher { p } => out.combined(&combine_pvalues(p, CombineMethod::Fisher, None)?),
            MetaCmd::Stouffer { p, n } => {
                let w = (!n.is_empty()).then(|| stouffer_weights(n));
                out.combined(&combine_pvalues(p, CombineMethod::Stouffer, w.as_deref())?)
            }
            MetaCmd::Pool { studies, random, ci_level } => {
                let parsed = studies
                    .iter()
                    .map(|s| {
                        let (e, se) = s.split_once(':').ok_or_else(|| {
                            Error::InvalidInput(format!("study '{s}' must be estimate:se"))
                        })?;
                        let num = |v: &str| {
                            v.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("'{v}' is not a number")))
                        };
                        Ok((num(e)?, num(se)?))
                    })
                    .collect::<Result<Vec<_>, Error>>()?;
                let model = if *random { PoolModel::Random } else { PoolModel::Fixed };
                out.pooled(&pool_effects(&parsed, model, *ci_level)?);
            }
        },
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Statistical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 1 && std::env::args().any(|a| a == "--json") {
                let reason = e.kind().to_string();
                println!("{}", serde_json::json!({"error": "usage", "message": reason, "exit_code": 1}));
            } else {
                let _ = e.print();
            }
            return ExitCode::from(code);
        }
    };
    let out = Output { json: cli.json };
    match run(&cli, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            out.error(&e, code);
            ExitCode::from(code)
        }
    }
}
