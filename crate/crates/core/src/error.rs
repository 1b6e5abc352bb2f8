use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tail exponent must be finite and > 1 (got {0})")]
    InvalidGamma(f64),
    #[error("minimum degree must be >= 1 (got {0})")]
    InvalidMinDegree(u64),
    #[error("a degree sequence needs at least one node")]
    EmptySequence,
    #[error("degree of node {node} is zero; degrees must be positive")]
    ZeroDegree { node: usize },
    #[error("sum of degrees {0} is odd; stubs cannot be paired")]
    OddStubCount(u64),
    #[error("degree sequence has {stubs} stubs; exact enumeration supports at most {limit}")]
    OracleLimit { stubs: u64, limit: u64 },
    #[error("no-edge bound needs L_n > 2*d_i + 1 (d_i = {d_i}, L_n = {l_n})")]
    NoEdgeBoundUndefined { d_i: u64, l_n: u64 },
    #[error("probability for pair ({i}, {j}) is {p}, outside [0, 1]")]
    ProbabilityOutOfRange { i: usize, j: usize, p: f64 },
    #[error("no-edge probability missing for pair ({i}, {j})")]
    MissingProbability { i: usize, j: usize },
    #[error("Tauberian term requires 1 < gamma < 2 (got {0})")]
    TauberianGamma(f64),
    #[error("Tauberian term requires a finite t in (0, {max}] (got {t})")]
    TauberianHorizon { t: f64, max: f64 },
    #[error("scale must be finite and > 0 (got {0})")]
    InvalidScale(f64),
    #[error("need at least {needed} distinct n levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("n level {n} has {got} replications, at least {needed} are required")]
    TooFewReplications { n: u64, got: usize, needed: usize },
    #[error("records passed to a single fit mix gamma values {0} and {1}")]
    MixedGamma(f64, f64),
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    PlainIo(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
