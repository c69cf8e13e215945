//! Simulation lab for decentralized subgradient optimization over directed
//! networks with Byzantine data-injection nodes.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! harness and CLI run in `f64` through the aliases below.

pub mod baselines;
pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod objective;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod vector;

pub use error::{Error, Result};
pub use graph::{DynamicDigraph, NodeId};
pub use scalar::Scalar;
pub use vector::{NormOrder, Vector};

pub type Vector64 = vector::Vector<f64>;
pub type Vector32 = vector::Vector<f32>;
pub type Instance64 = objective::ObjectiveInstance<f64>;
pub type Instance32 = objective::ObjectiveInstance<f32>;
pub type Attack64 = objective::AttackSpec<f64>;
pub type ProtocolConfig64 = protocol::ProtocolConfig<f64>;
pub type SimState64 = protocol::SimState<f64>;
pub type TrialReport64 = metrics::TrialReport<f64>;
pub type TvConfig64 = baselines::TvConfig<f64>;
pub type TrimConfig64 = baselines::TrimConfig<f64>;
