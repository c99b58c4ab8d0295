//! Monte Carlo episodes of the sensor, agent and detector loop.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use super::kernel::{public_belief_update, ActionKernel};
use super::model::{private_belief_update, ChangeModel, DetectionCosts, ObservationModel};
use crate::error::{Error, Result};
use crate::io::{write_table, Metadata};
use crate::quantum::steady_state;
use crate::solver::{Decision, Policy};
use crate::{BeliefVector, DecisionFrame, PsychParams, SteadyStateConfig};

/// Everything that generates data in an episode.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub frame: DecisionFrame,
    pub params: PsychParams,
    pub change: ChangeModel,
    pub obs: ObservationModel,
    pub costs: DetectionCosts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    /// State label, `1` post-change and `2` pre-change.
    pub x: u8,
    pub y: usize,
    pub eta1: f64,
    pub a: usize,
    pub pi1: f64,
    pub u: Decision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub change_time: usize,
    pub stop_time: usize,
    pub steps: Vec<StepRecord>,
    pub cost: f64,
}

impl EpisodeTrace {
    pub fn false_alarm(&self) -> bool {
        self.stop_time < self.change_time
    }

    pub fn delay(&self) -> usize {
        self.stop_time.saturating_sub(self.change_time)
    }

    pub fn write_csv<W: Write>(&self, out: W, meta: &Metadata) -> Result<()> {
        let rows = self.steps.iter().map(|s| {
            vec![
                s.n.to_string(),
                s.x.to_string(),
                s.y.to_string(),
                s.eta1.to_string(),
                s.a.to_string(),
                s.pi1.to_string(),
                s.u.code().to_string(),
            ]
        });
        write_table(out, meta, &["n", "x", "y", "eta1", "a", "pi1", "u"], rows)
    }
}

/// Default cap `10 E[tau0] + 1000` on episode length.
pub fn step_cap(change: &ChangeModel) -> usize {
    (10.0 * change.mean_change_time() + 1000.0).ceil() as usize
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// One episode. The first decision epoch is `n = 1`; `stream` selects an
/// independent ChaCha stream under `seed`.
pub fn simulate_episode(
    scenario: &Scenario,
    kernel: &ActionKernel,
    policy: &Policy,
    seed: u64,
    stream: u64,
) -> Result<EpisodeTrace> {
    simulate_episode_capped(scenario, kernel, policy, seed, stream, step_cap(&scenario.change))
}

pub fn simulate_episode_capped(
    scenario: &Scenario,
    kernel: &ActionKernel,
    policy: &Policy,
    seed: u64,
    stream: u64,
    cap: usize,
) -> Result<EpisodeTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let change = &scenario.change;
    let geometric = Geometric::new(1.0 - change.p()).map_err(|e| Error::invalid(e.to_string()))?;
    let change_time = 1 + geometric.sample(&mut rng) as usize;
    let ss_config = SteadyStateConfig::default();

    let mut pi = change.initial_belief();
    let mut steps = Vec::new();
    for n in 1..=cap {
        let x = if n >= change_time { 0 } else { 1 };
        let y = sample_index(scenario.obs.row(x), rng.random());
        let (eta, _) = private_belief_update(&pi, y, change, &scenario.obs)?;
        let gamma = steady_state(&scenario.frame, &scenario.params, &eta, &ss_config)?.gamma;
        let a = sample_index(gamma.as_slice(), rng.random());
        let (next, _) = public_belief_update(&pi, a, change, kernel)?;
        pi = next;
        let u = policy.decide(pi.get(0));
        steps.push(StepRecord { n, x: x as u8 + 1, y, eta1: eta.get(0), a, pi1: pi.get(0), u });
        if u == Decision::Stop {
            let costs = &scenario.costs;
            let cost = if n < change_time { costs.f } else { costs.d * (n - change_time) as f64 };
            return Ok(EpisodeTrace { change_time, stop_time: n, steps, cost });
        }
    }
    Err(Error::RunawayEpisode { cap })
}

/// Summary of `n` independent episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub episodes: usize,
    pub mean: f64,
    pub std_error: f64,
    pub false_alarm_rate: f64,
    /// Mean of `tau - tau0` over episodes that stopped at or after the change.
    pub mean_delay_given_detection: Option<f64>,
}

impl CostEstimate {
    pub fn from_traces(traces: &[EpisodeTrace]) -> Result<Self> {
        let n = traces.len();
        if n == 0 {
            return Err(Error::invalid("need at least one episode"));
        }
        let costs: Vec<f64> = traces.iter().map(|t| t.cost).collect();
        let mean = costs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let alarms = traces.iter().filter(|t| t.false_alarm()).count();
        let detected: Vec<f64> = traces.iter().filter(|t| !t.false_alarm()).map(|t| t.delay() as f64).collect();
        Ok(Self {
            episodes: n,
            mean,
            std_error: (var / n as f64).sqrt(),
            false_alarm_rate: alarms as f64 / n as f64,
            mean_delay_given_detection: if detected.is_empty() {
                None
            } else {
                Some(detected.iter().sum::<f64>() / detected.len() as f64)
            },
        })
    }
}

/// Runs episodes `0..n_episodes` (stream index = episode index).
pub fn run_episodes(
    scenario: &Scenario,
    kernel: &ActionKernel,
    policy: &Policy,
    seed: u64,
    n_episodes: usize,
) -> Result<Vec<EpisodeTrace>> {
    (0..n_episodes as u64)
        .into_par_iter()
        .map(|k| simulate_episode(scenario, kernel, policy, seed, k))
        .collect()
}

/// Sample mean and standard error of the realized cost.
pub fn estimate_cost(
    scenario: &Scenario,
    kernel: &ActionKernel,
    policy: &Policy,
    seed: u64,
    n_episodes: usize,
) -> Result<CostEstimate> {
    if n_episodes == 0 {
        return Err(Error::invalid("need at least one episode"));
    }
    CostEstimate::from_traces(&run_episodes(scenario, kernel, policy, seed, n_episodes)?)
}

/// Convenience start belief `pi0` as a vector.
pub fn initial_belief(change: &ChangeModel) -> BeliefVector {
    change.initial_belief()
}
