//! Quickest detection of a change in a state of nature from the decisions of
//! agents whose choices follow an open-quantum (Lindblad) cognition model.
//!
//! - [`quantum`] builds the Lindbladian and its steady-state action
//!   distribution.
//! - [`protocol`] holds the change and observation models, the sensor and
//!   detector filters, the action kernel and an episode simulator.
//! - [`solver`] runs value iteration for the stopping problem.
//! - [`dominance`] checks Blackwell dominance, the parameter-mismatch bound
//!   and scans parameter regions.
//!
//! The quantum core is generic over the scalar; everything downstream works
//! in `f64`, and the aliases below fix the core to `f64` as well.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dominance;
pub mod error;
pub mod io;
pub mod protocol;
pub mod quantum;
pub mod solver;

pub use error::{Error, Result};

pub type PsychParams = quantum::PsychParams<f64>;
pub type DecisionFrame = quantum::DecisionFrame<f64>;
pub type BeliefVector = quantum::BeliefVector<f64>;
pub type DensityOperator = quantum::DensityOperator<f64>;
pub type Superoperator = quantum::Superoperator<f64>;
pub type ActionDistribution = quantum::ActionDistribution<f64>;
pub type SteadyStateConfig = quantum::SteadyStateConfig<f64>;
