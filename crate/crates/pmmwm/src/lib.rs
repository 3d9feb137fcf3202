//! Solver toolkit for the partitioning min-max weighted matching problem:
//! pick a perfect matching of U into V *and* a capacity-bounded m-way
//! partition of U so that the heaviest part — the largest sum of matched
//! edge weights — is as light as possible.
//!
//! The pipeline: [`problem`] defines instances and the objective,
//! [`hungarian`] computes min-weight perfect matchings with a reusable
//! dual state, [`incremental`] rematches a single vertex after an edge is
//! priced out, [`partitioning`] builds and improves the capacity-bounded
//! partition, and [`solver`] ties the three stages into the two solver
//! variants. [`instances`] generates and serializes the benchmark
//! families; [`oracle`] holds brute-force references used by the tests.

pub mod hungarian;
pub mod incremental;
pub mod instances;
pub mod oracle;
pub mod partitioning;
pub mod problem;
pub mod solver;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A vertex of U is unmatched where a perfect matching is required.
    #[error("vertex u{0} is unmatched")]
    InfeasibleMatching(usize),
    #[error("edge (u{u}, v{v}) does not exist")]
    EdgeNotFound { u: usize, v: usize },
    #[error("vertex u{0} has no incident edges")]
    IsolatedVertex(usize),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Exhaustive search refused: the instance exceeds the oracle limits.
    #[error("too large for exhaustive search: {0}")]
    TooLarge(String),
    /// Not enough distinct representable weights for the requested size.
    #[error("weight grid exhausted: need {needed} distinct values, only {available} exist")]
    GridExhausted { needed: usize, available: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// A solver stage failed; carries the 1-based iteration number.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
