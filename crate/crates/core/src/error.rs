use thiserror::Error;

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Statistical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid hypothesis: {0}")]
    InvalidDag(String),
    #[error("cycle detected through node '{0}'")]
    Cycle(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("'{node}' is a collider on a treatment-outcome path; conditioning on it would confound the effect")]
    Collider { node: String },
    #[error("'{node}' is a descendant of the treatment and cannot be adjusted for")]
    DescendantOfTreatment { node: String },
    #[error("adjustment set {set:?} leaves a backdoor path open")]
    OpenBackdoor { set: Vec<String> },
    #[error("too many candidate nodes for exhaustive adjustment search ({count} > {limit})")]
    TooManyCandidates { count: usize, limit: usize },

    #[error("invalid data at row {row}, column '{column}': {message}")]
    DataType {
        row: usize,
        column: String,
        message: String,
    },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid method: {0}")]
    InvalidMethod(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),
    #[error("optimizer did not converge after {iterations} iterations (last deviance {last_value})")]
    NonConvergence { iterations: usize, last_value: f64 },
    #[error("convergence gate failed: max split R-hat {rhat:.4} exceeds {threshold}")]
    RhatGate { rhat: f64, threshold: f64 },

    #[error("conclusions are of different kinds ({0} vs {1}); perform a reanalysis first")]
    MixedVariants(String, String),
    #[error("incommensurable evidence: phenomenon {0} differs from {1}")]
    Incommensurable(String, String),
    #[error("duplicate evidence: {0}")]
    Duplicate(String),
    #[error("not a reanalysis: {0}")]
    NotReanalysis(String),
    #[error("unknown {kind} '{id}'")]
    NotFound { kind: &'static str, id: String },
    #[error("edge {from} -> {to} conflates {types}; supply decomposition evidence or an explicit override")]
    Conflated {
        from: String,
        to: String,
        types: String,
    },
    #[error("revision edge {from} -> {to} needs a purpose (precision or deconfound)")]
    MissingPurpose { from: String, to: String },
    #[error("graph would contain a cycle via {0}")]
    GraphCycle(String),
    #[error("no evidence")]
    NoEvidence,

    #[error("repository error: {0}")]
    Repo(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NonConvergence { .. } | Error::RhatGate { .. } | Error::RankDeficient(_) => {
                ErrorClass::Statistical
            }
            Error::Io(_) | Error::Repo(_) => ErrorClass::Data,
            _ => ErrorClass::Data,
        }
    }

    /// Short machine-readable tag for JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::InvalidDag(_) => "invalid_dag",
            Error::Cycle(_) => "cycle",
            Error::UnknownNode(_) => "unknown_node",
            Error::Collider { .. } => "collider",
            Error::DescendantOfTreatment { .. } => "descendant_of_treatment",
            Error::OpenBackdoor { .. } => "open_backdoor",
            Error::TooManyCandidates { .. } => "too_many_candidates",
            Error::DataType { .. } => "data_type",
            Error::MissingColumn(_) => "missing_column",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::InvalidMethod(_) => "invalid_method",
            Error::InvalidInput(_) => "invalid_input",
            Error::InsufficientData(_) => "insufficient_data",
            Error::RankDeficient(_) => "rank_deficient",
            Error::NonConvergence { .. } => "non_convergence",
            Error::RhatGate { .. } => "rhat_gate",
            Error::MixedVariants(..) => "mixed_variants",
            Error::Incommensurable(..) => "incommensurable",
            Error::Duplicate(_) => "duplicate",
            Error::NotReanalysis(_) => "not_reanalysis",
            Error::NotFound { .. } => "not_found",
            Error::Conflated { .. } => "conflated",
            Error::MissingPurpose { .. } => "missing_purpose",
            Error::GraphCycle(_) => "graph_cycle",
            Error::NoEvidence => "no_evidence",
            Error::Repo(_) => "repo",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
