//! Unified error type. Every contract violation carries a message that names
//! the violated hypothesis in mathematical terms (admissible ranges, matrix
//! conditioning, geometry preconditions), so callers and logs stay
//! self-explanatory.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of geometry construction, assembly, estimation, and the
/// experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty node set")]
    EmptyNodeSet,

    #[error("need at least two nodes to measure a separation radius")]
    TooFewNodes,

    #[error("coalescing nodes: minimal pairwise distance {min_dist:e} below resolution")]
    CoalescingNodes { min_dist: f64 },

    #[error("focal point: {0}")]
    FocalPoint(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error(
        "unsupported smoothness m={m} for dimension d={d}: closed-form kernels require \
         m - d/2 in {{1/2, 3/2, 5/2, 7/2}}"
    )]
    UnsupportedSmoothness { m: f64, d: usize },

    #[error(
        "derivative order {requested} exceeds the kernel's smoothness budget \
         (classical derivatives available up to total order {budget})"
    )]
    DerivativeBudget { requested: usize, budget: usize },

    #[error("inadmissible order: {0}")]
    InadmissibleOrder(String),

    #[error(
        "matrix not positive definite after maximal diagonal jitter \
         ({context}; pivot {pivot:e} at index {index}, jitter scale reached {jitter:e})"
    )]
    NotPositiveDefinite {
        context: String,
        pivot: f64,
        index: usize,
        jitter: f64,
    },

    #[error("quadrature rule would need {nodes} nodes, above the 10^7 ceiling")]
    RuleTooLarge { nodes: usize },

    #[error("refinement level would need {nodes} nodes, above the 10^5 ceiling")]
    RefinementTooLarge { nodes: usize },

    #[error(
        "under-resolved: top-quarter spectrum carries {fraction:e} of the energy \
         (limit 1e-8); increase the sampling exponent K"
    )]
    UnderResolved { fraction: f64 },

    #[error("unsupported norm exponent {0} (supported: 1, 2, inf)")]
    UnsupportedNormExponent(String),

    #[error("exponent fit needs at least 4 data points, got {0}")]
    FitTooFewPoints(usize),

    #[error("exponent fit needs strictly monotone positive scales and positive values: {0}")]
    FitBadData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("experiment incomplete: {0}")]
    Incomplete(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure is a usage/configuration problem (CLI exit 1)
    /// rather than a runtime failure (CLI exit 2).
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
