//! Kernel trial spaces on intervals, boxes, disks, annuli, and the circle,
//! with machinery to measure the extremal constants of inverse inequalities
//! (Bernstein, Nikolskii, stability, sampling, norm equivalences) and fit
//! their scaling exponents across refinement sequences.
//!
//! The crate is generic over the scalar type through [`scalar::Real`]
//! (satisfied by `f32` and `f64`); the type aliases at the crate root fix
//! the shipped double-precision configuration.

pub mod config;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod manifold;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod sobolev;

pub use error::{Error, Result};

/// Double-precision matrix.
pub type Mat = linalg::Mat<f64>;
/// Double-precision domain.
pub type Domain = geometry::Domain<f64>;
/// Double-precision host (domain or manifold).
pub type Host = geometry::Host<f64>;
/// Double-precision node set.
pub type PointSet = geometry::PointSet<f64>;
/// Double-precision trial space.
pub type TrialSpace = kernels::TrialSpace<f64>;
/// Double-precision quadrature rule.
pub type Rule = quadrature::Rule<f64>;
/// Double-precision Sobolev Gram.
pub type SobolevGram = sobolev::SobolevGram<f64>;
/// Double-precision extremal-constant estimate.
pub type ConstantEstimate = estimators::ConstantEstimate<f64>;
/// Double-precision band/circle equivalence measurement.
pub type TrialEquivalence = manifold::TrialEquivalence<f64>;

pub use config::{parse_config, ExperimentConfig, Kind, NodeGenerator};
pub use experiment::{run_scaling_experiment, write_artifacts, RunOptions, ScalingReport};
