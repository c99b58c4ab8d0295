//! Value iteration for the stopping problem on a belief grid.
//!
//! Every grid point's successors `(sigma, T(pi, .))` are computed once; a
//! sweep then only interpolates the current value function.

use std::io::{Read, Write};

use rayon::prelude::*;

use super::grid::BeliefGrid;
use super::policy::{Decision, Policy};
use crate::error::{Error, Result};
use crate::io::{field, read_table, write_table, Metadata};
use crate::protocol::{public_update_with, ActionKernel, ChangeModel, DetectionCosts, ObservationModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueIterationConfig {
    /// Sup-norm change that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ValueIterationConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 10_000 }
    }
}

/// Converged value function on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    grid: BeliefGrid,
    values: Vec<f64>,
    /// Sup-norm change of each sweep.
    deltas: Vec<f64>,
}

impl ValueTable {
    pub fn grid(&self) -> BeliefGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn iterations(&self) -> usize {
        self.deltas.len()
    }

    pub fn value_at(&self, pi1: f64) -> f64 {
        self.grid.interpolate(&self.values, pi1)
    }

    /// Largest discrete second difference `V_{i-1} - 2 V_i + V_{i+1}`.
    pub fn max_second_difference(&self) -> f64 {
        self.values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes `pi1,V,u` rows.
    pub fn write_csv<W: Write>(&self, policy: &Policy, out: W, meta: &Metadata) -> Result<()> {
        if policy.grid() != self.grid {
            return Err(Error::invalid("policy and value table are on different grids"));
        }
        let mut meta = meta.clone();
        meta.insert("iterations".into(), self.iterations().to_string());
        let rows = self.values.iter().enumerate().map(|(i, v)| {
            vec![self.grid.point(i).to_string(), v.to_string(), policy.at(i).code().to_string()]
        });
        write_table(out, &meta, &["pi1", "V", "u"], rows)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<(Self, Policy, Metadata)> {
        let (meta, rows) = read_table(input, &["pi1", "V", "u"])?;
        if rows.len() < 2 {
            return Err(Error::Parse("value table needs at least two rows".into()));
        }
        let grid = BeliefGrid::new(rows.len() - 1)?;
        let mut values = Vec::with_capacity(rows.len());
        let mut decisions = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let pi1: f64 = field(r, 0)?;
            if (pi1 - grid.point(i)).abs() > 1e-12 {
                return Err(Error::Parse(format!("value row {i} is off the grid: pi1={pi1}")));
            }
            values.push(field(r, 1)?);
            decisions.push(Decision::from_code(field(r, 2)?)?);
        }
        let policy = Policy::new(grid, decisions)?;
        Ok((Self { grid, values, deltas: Vec::new() }, policy, meta))
    }
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    prob: f64,
    cell: usize,
    w: f64,
}

/// Successor beliefs and their probabilities for every grid point.
#[derive(Debug, Clone)]
pub struct Transitions {
    grid: BeliefGrid,
    branches: Vec<Vec<Branch>>,
}

impl Transitions {
    /// Successors `T_bar(pi, a)` with weights `sigma_bar(pi, a)`.
    pub fn from_kernel(kernel: &ActionKernel, change: &ChangeModel) -> Self {
        let grid = kernel.grid();
        let branches = (0..grid.len())
            .map(|i| {
                let pi1 = grid.point(i);
                (0..kernel.n_actions())
                    .filter_map(|a| {
                        let r = [kernel.row(i, 0)[a], kernel.row(i, 1)[a]];
                        public_update_with([pi1, 1.0 - pi1], r, change).map(|(next, prob)| branch(&grid, next[0], prob))
                    })
                    .collect()
            })
            .collect();
        Self { grid, branches }
    }

    /// Successors `T(pi, y)` with weights `sigma(pi, y)`.
    pub fn from_observations(obs: &ObservationModel, change: &ChangeModel, grid: BeliefGrid) -> Self {
        let branches = (0..grid.len())
            .map(|i| {
                let pi1 = grid.point(i);
                (0..obs.n_obs())
                    .filter_map(|y| {
                        let r = [obs.prob(0, y), obs.prob(1, y)];
                        public_update_with([pi1, 1.0 - pi1], r, change).map(|(next, prob)| branch(&grid, next[0], prob))
                    })
                    .collect()
            })
            .collect();
        Self { grid, branches }
    }

    pub fn grid(&self) -> BeliefGrid {
        self.grid
    }

    /// `sum_k sigma_k V(next_k)` at grid point `i`.
    pub fn expected(&self, values: &[f64], i: usize) -> f64 {
        self.branches[i]
            .iter()
            .map(|b| {
                let v = if b.w == 0.0 { values[b.cell] } else { (1.0 - b.w) * values[b.cell] + b.w * values[b.cell + 1] };
                b.prob * v
            })
            .sum()
    }

    /// `(sigma, next pi(1))` pairs at grid point `i`.
    pub fn successors(&self, i: usize) -> Vec<(f64, f64)> {
        let step = self.grid.step();
        self.branches[i].iter().map(|b| (b.prob, (b.cell as f64 + b.w) * step)).collect()
    }
}

fn branch(grid: &BeliefGrid, next_pi1: f64, prob: f64) -> Branch {
    let (cell, w) = grid.locate(next_pi1);
    Branch { prob, cell, w }
}

fn q_values(trans: &Transitions, costs: &DetectionCosts, values: &[f64], i: usize) -> (f64, f64) {
    let pi1 = trans.grid.point(i);
    (costs.stop_cost(pi1), costs.continue_cost(pi1) + trans.expected(values, i))
}

fn iterate(
    trans: &Transitions,
    config: &ValueIterationConfig,
    backup: impl Fn(&[f64], usize) -> f64 + Sync,
) -> Result<ValueTable> {
    if !(config.tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be > 0, got {}", config.tol)));
    }
    let n = trans.grid.len();
    let mut values = vec![0.0; n];
    let mut deltas = Vec::new();
    for _ in 0..config.max_iter {
        let next: Vec<f64> = (0..n).into_par_iter().with_min_len(256).map(|i| backup(&values, i)).collect();
        let delta = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !delta.is_finite() {
            return Err(Error::NumericalFailure("value iteration produced non-finite values".into()));
        }
        values = next;
        deltas.push(delta);
        if delta <= config.tol {
            return Ok(ValueTable { grid: trans.grid, values, deltas });
        }
    }
    Err(Error::NonConvergence { iterations: config.max_iter, last_delta: deltas.last().copied().unwrap_or(f64::NAN) })
}

/// Optimal value and policy for transitions `trans`. Ties go to stopping.
pub fn solve_transitions(
    trans: &Transitions,
    costs: &DetectionCosts,
    config: &ValueIterationConfig,
) -> Result<(ValueTable, Policy)> {
    let table = iterate(trans, config, |v, i| {
        let (stop, go) = q_values(trans, costs, v, i);
        stop.min(go)
    })?;
    let decisions = (0..trans.grid.len())
        .map(|i| {
            let (stop, go) = q_values(trans, costs, &table.values, i);
            if stop <= go {
                Decision::Stop
            } else {
                Decision::Continue
            }
        })
        .collect();
    let policy = Policy::new(trans.grid, decisions)?;
    Ok((table, policy))
}

/// Optimal stopping against the detector's action kernel.
pub fn value_iteration(
    kernel: &ActionKernel,
    change: &ChangeModel,
    costs: &DetectionCosts,
    config: &ValueIterationConfig,
) -> Result<(ValueTable, Policy)> {
    solve_transitions(&Transitions::from_kernel(kernel, change), costs, config)
}

/// Optimal stopping when the detector sees the sensor's observations.
pub fn classical_value_iteration(
    change: &ChangeModel,
    obs: &ObservationModel,
    costs: &DetectionCosts,
    grid: BeliefGrid,
    config: &ValueIterationConfig,
) -> Result<(ValueTable, Policy)> {
    solve_transitions(&Transitions::from_observations(obs, change, grid), costs, config)
}

/// Expected cost of following `policy` under `trans`.
pub fn evaluate_transitions(
    trans: &Transitions,
    costs: &DetectionCosts,
    policy: &Policy,
    config: &ValueIterationConfig,
) -> Result<ValueTable> {
    if policy.grid() != trans.grid {
        return Err(Error::invalid("policy grid differs from the model grid"));
    }
    iterate(trans, config, |v, i| {
        let (stop, go) = q_values(trans, costs, v, i);
        match policy.at(i) {
            Decision::Stop => stop,
            Decision::Continue => go,
        }
    })
}

pub fn evaluate_policy(
    kernel: &ActionKernel,
    change: &ChangeModel,
    costs: &DetectionCosts,
    policy: &Policy,
    config: &ValueIterationConfig,
) -> Result<ValueTable> {
    evaluate_transitions(&Transitions::from_kernel(kernel, change), costs, policy, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::build_action_kernel;
    use crate::{DecisionFrame, PsychParams};

    fn pd_obs() -> ObservationModel {
        ObservationModel::new(vec![0.6, 0.25, 0.15], vec![0.15, 0.25, 0.6]).unwrap()
    }

    fn pd_kernel(grid: BeliefGrid) -> ActionKernel {
        let frame = DecisionFrame::prisoners_dilemma(20.0, 5.0, 10.0, 25.0).unwrap();
        let params = PsychParams::new(0.812, 10.495, 0.9).unwrap();
        build_action_kernel(&frame, &params, &ChangeModel::new(0.95).unwrap(), &pd_obs(), grid).unwrap()
    }

    #[test]
    fn free_stopping_stops_everywhere() {
        let grid = BeliefGrid::new(50).unwrap();
        let change = ChangeModel::new(0.95).unwrap();
        let costs = DetectionCosts::new(0.0, 1.0).unwrap();
        let (v, pol) = value_iteration(&pd_kernel(grid), &change, &costs, &Default::default()).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
        assert_eq!(pol.threshold(), Some(0.0));
    }

    #[test]
    fn post_change_belief_is_free() {
        let grid = BeliefGrid::new(50).unwrap();
        let change = ChangeModel::new(0.95).unwrap();
        let costs = DetectionCosts::new(5.0, 1.0).unwrap();
        let (v, pol) = value_iteration(&pd_kernel(grid), &change, &costs, &Default::default()).unwrap();
        assert_eq!(v.values()[50], 0.0);
        assert_eq!(pol.at(50), Decision::Stop);
        assert!(v.values()[0] <= 5.0);
    }

    #[test]
    fn optimal_policy_evaluates_to_its_value() {
        let grid = BeliefGrid::new(100).unwrap();
        let change = ChangeModel::new(0.95).unwrap();
        let costs = DetectionCosts::new(5.0, 1.0).unwrap();
        let kernel = pd_kernel(grid);
        let cfg = ValueIterationConfig::default();
        let (v, pol) = value_iteration(&kernel, &change, &costs, &cfg).unwrap();
        let j = evaluate_policy(&kernel, &change, &costs, &pol, &cfg).unwrap();
        for (a, b) in v.values().iter().zip(j.values()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn always_stop_costs_false_alarm_mass() {
        let grid = BeliefGrid::new(20).unwrap();
        let change = ChangeModel::new(0.9).unwrap();
        let costs = DetectionCosts::new(3.0, 1.0).unwrap();
        let j = evaluate_policy(&pd_kernel(grid), &change, &costs, &Policy::always_stop(grid), &Default::default())
            .unwrap();
        for (i, v) in j.values().iter().enumerate() {
            assert_eq!(*v, 3.0 * (1.0 - grid.point(i)));
        }
    }

    #[test]
    fn never_stopping_does_not_converge() {
        let grid = BeliefGrid::new(10).unwrap();
        let change = ChangeModel::new(0.5).unwrap();
        let costs = DetectionCosts::new(1.0, 1.0).unwrap();
        let never = Policy::new(grid, vec![Decision::Continue; 11]).unwrap();
        let cfg = ValueIterationConfig { tol: 1e-8, max_iter: 50 };
        let err = evaluate_policy(&pd_kernel(grid), &change, &costs, &never, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 50, .. }));
    }

    #[test]
    fn uninformative_observations_match_blind_stopping() {
        let grid = BeliefGrid::new(200).unwrap();
        let change = ChangeModel::new(0.9).unwrap();
        let costs = DetectionCosts::new(4.0, 1.0).unwrap();
        let flat = ObservationModel::new(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap();
        let single = ObservationModel::new(vec![1.0], vec![1.0]).unwrap();
        let cfg = ValueIterationConfig::default();
        let (v1, p1) = classical_value_iteration(&change, &flat, &costs, grid, &cfg).unwrap();
        let (v2, p2) = classical_value_iteration(&change, &single, &costs, grid, &cfg).unwrap();
        for (a, b) in v1.values().iter().zip(v2.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(p1, p2);
        assert_eq!(p1.report().crossings, 1);
    }

    #[test]
    fn csv_roundtrip() {
        let grid = BeliefGrid::new(30).unwrap();
        let change = ChangeModel::new(0.95).unwrap();
        let costs = DetectionCosts::new(5.0, 1.0).unwrap();
        let (v, pol) = classical_value_iteration(&change, &pd_obs(), &costs, grid, &Default::default()).unwrap();
        let mut buf = Vec::new();
        v.write_csv(&pol, &mut buf, &Metadata::new()).unwrap();
        let (v2, pol2, meta) = ValueTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(v2.values(), v.values());
        assert_eq!(pol2, pol);
        assert_eq!(meta["iterations"], v.iterations().to_string());
    }
}
