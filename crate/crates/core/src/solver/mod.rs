//! Optimal stopping by value iteration on a grid over `pi(1)`.

mod grid;
mod policy;
mod vi;

pub use grid::BeliefGrid;
pub use policy::{extract_threshold, Decision, Policy, ThresholdReport};
pub use vi::{
    classical_value_iteration, evaluate_policy, evaluate_transitions, solve_transitions, value_iteration,
    Transitions, ValueIterationConfig, ValueTable,
};
