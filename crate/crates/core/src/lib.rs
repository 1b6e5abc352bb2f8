//! Erased configuration model (ECM) simulation.
//!
//! Degrees are drawn i.i.d. from a discrete Pareto law with tail
//! `P(X >= k) = (k_min / k)^gamma`, stubs are paired uniformly at random,
//! and the resulting multigraph is made simple by dropping self-loops and
//! collapsing multi-edges. The crate measures how many edges that erasure
//! removes and compares the measured scaling in `n` against the analytic
//! three-regime upper bounds.
//!
//! Module map:
//!
//! - [`degree`]: the degree law and even-sum degree sequences.
//! - [`graph`]: uniform stub pairing, erasure and edge-list IO.
//! - [`estimators`]: closed-form bounds and the Tauberian functional.
//! - [`oracle`]: exact enumeration of all perfect matchings on tiny inputs.
//! - [`experiment`]: replicated sweeps, CSV records and log-log fits.
//! - [`cli`]: the `ecm` command-line front end.

pub mod cli;
pub mod degree;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod graph;
pub mod oracle;
pub mod stats;

pub use degree::{DegreeDistribution, DegreeSequence, SequenceHeader};
pub use error::{Error, Result};
pub use estimators::{BoundReport, IdentityConvention, NoEdgeProbs};
pub use experiment::{FitResult, SweepPlan, TrialRecord};
pub use graph::{ErasureStats, Multigraph, SimpleGraph};
pub use oracle::ExactResult;
