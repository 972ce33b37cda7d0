//! Simulation and parameter estimation for contact processes on graphs.
//!
//! The crate covers the whole pipeline: building a contact network
//! ([`graph`]), the two node-flip dynamics and their holding-class
//! signatures ([`dynamics`]), exact trajectory simulation ([`simulate`],
//! [`trajectory`]), recovery of the rate parameters from one trajectory
//! ([`estimate`], [`solve`]), class-count bounds and exhaustive census
//! ([`bounds`], [`census`]), error metrics ([`metrics`]) and a replicated
//! experiment harness ([`experiment`]).
//!
//! Batch work (census graphs, enumeration shards, experiment replications)
//! runs on rayon when the default `parallel` feature is enabled.

pub mod bounds;
pub mod census;
pub mod dynamics;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod simulate;
pub mod solve;
pub mod trajectory;

pub use dynamics::{Configuration, HoldingSignature, Model, ModelParams, ThetaVector};
pub use error::{Error, Result};
pub use estimate::{estimate_theta, Estimator, ThetaEstimate};
pub use graph::Graph;
pub use par::Execution;
pub use simulate::{simulate, StopRule};
pub use solve::{Method, ReducedSystem};
pub use trajectory::Trajectory;
