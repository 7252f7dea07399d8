//! Causal effects of treatments in economies whose units interact through a
//! spatial autoregressive network.
//!
//! One fitted model `Y = rho W Y + beta D + X gamma + eps` supports several
//! causal questions. This crate builds the network from unit
//! characteristics ([`netgen`]), simulates economies ([`dgp`]), computes the
//! partial-equilibrium, local-interaction and network-consistent effects
//! ([`counterfact`]), estimates the model ([`sarfit`]) and runs Monte Carlo
//! experiments around all of it ([`mcharness`]).

pub mod counterfact;
pub mod csvfmt;
pub mod dgp;
pub mod error;
pub mod linalg;
pub mod mcharness;
pub mod netgen;
pub mod regimes;
pub mod rng;
pub mod sarfit;

pub use counterfact::{CounterfactualReport, SpilloverEntry};
pub use dgp::{AssignmentMode, AssignmentSpec, Population, StructuralParams};
pub use error::{Error, Result};
pub use mcharness::{ExperimentConfig, MonteCarloSummary};
pub use netgen::{InteractionMatrix, NetworkParams, UnitCharacteristics};
pub use sarfit::{EstimationResult, ImpliedEffects};
