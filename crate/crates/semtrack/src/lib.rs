//! Online tracking of time-varying sparse network topologies.
//!
//! Each node's signal is modeled as a sparse linear combination of the
//! other nodes' signals plus a gained exogenous input; the weights form a
//! directed adjacency matrix that drifts over time. This crate provides:
//!
//! - [`model`]: the generative model and seeded synthetic-data generators
//!   (Erdos-Renyi support, smooth or abrupt topology evolution).
//! - [`tracker`]: the online estimator, one proximal-gradient step per
//!   incoming batch on an exponentially weighted least-squares objective
//!   with an l1 penalty on the adjacency weights.
//! - [`hindsight`]: clairvoyant comparators, i.e. exact per-step optima a
//!   batch solver computes after the fact, plus a KKT sign-enumeration
//!   oracle for cross-checks.
//! - [`metrics`]: dynamic regret, comparator path lengths, MSE, and a
//!   regret bound evaluated from measured constants of the run.
//! - [`experiment`]: an end-to-end runner that writes reproducible CSV /
//!   JSON / SVG artifact directories, also usable on ingested streams.
//!
//! The `examples/` directory demonstrates each capability end to end; the
//! `semtrack` binary exposes the experiment runner on the command line.

pub mod chart;
pub mod error;
pub mod experiment;
pub mod hindsight;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod tracker;

pub use error::{Error, Result};
pub use experiment::{run_experiment, AlphaChoice, ExperimentConfig};
pub use model::{GeneratorConfig, ObservationBatch, Regime, TopologySnapshot};
pub use tracker::{AlgoConfig, Tracker};
