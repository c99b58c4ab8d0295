//! Detection protocol: a sensor observes the state, an agent acts on the
//! sensor's private belief, and the detector filters the agent's actions.

mod kernel;
mod model;
mod simulate;

pub use kernel::{
    build_action_kernel, build_action_kernel_with, build_mismatched_kernel, build_mismatched_kernel_with,
    public_belief_update, ActionKernel, ParameterMixture,
};
pub(crate) use kernel::agent_belief;
pub use model::{private_belief_update, public_update_with, ChangeModel, DetectionCosts, ObservationModel};
pub use simulate::{
    estimate_cost, initial_belief, run_episodes, simulate_episode, simulate_episode_capped, step_cap, CostEstimate,
    EpisodeTrace, Scenario, StepRecord,
};
