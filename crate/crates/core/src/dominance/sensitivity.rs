//! Cost of running the optimal policy of a misspecified kernel, against the
//! KL-divergence bound on that loss.

use crate::error::{Error, Result};
use crate::protocol::{build_action_kernel_with, build_mismatched_kernel_with, ActionKernel, ChangeModel, ParameterMixture, Scenario};
use crate::solver::{evaluate_policy, value_iteration, BeliefGrid, Policy, ValueIterationConfig};
use crate::SteadyStateConfig;

/// `D(p || q)` with `0 log 0 = 0`; infinite when `q = 0 < p`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi <= 0.0 {
                0.0
            } else if qi <= 0.0 {
                f64::INFINITY
            } else {
                pi * (pi / qi).ln()
            }
        })
        .sum::<f64>()
        .max(0.0)
}

/// `sqrt(2) sup_pi max_i sum_j P_ij sqrt(D(R_{j,pi} || R_hat_{j,pi}))` over
/// the grid.
pub fn model_distance(kernel: &ActionKernel, kernel_hat: &ActionKernel, change: &ChangeModel) -> Result<f64> {
    if kernel.grid() != kernel_hat.grid() || kernel.n_actions() != kernel_hat.n_actions() {
        return Err(Error::invalid("kernels must share grid and action set"));
    }
    let p = change.transition();
    let mut sup: f64 = 0.0;
    for i in 0..kernel.grid().len() {
        let roots = [0, 1].map(|j| kl_divergence(kernel.row(i, j), kernel_hat.row(i, j)).sqrt());
        for row in &p {
            let s = row[0] * roots[0] + row[1] * roots[1];
            if s.is_nan() {
                // 0 * inf: the transition never reaches the offending state
                continue;
            }
            sup = sup.max(s);
        }
    }
    Ok(std::f64::consts::SQRT_2 * sup)
}

#[derive(Debug, Clone)]
pub struct KLBoundReport {
    /// `(1/p) max_{i,u} C(e_i, u)`.
    pub k: f64,
    pub distance: f64,
    /// `J_{mu*(theta_hat)}(pi; theta)` per grid point.
    pub lhs: Vec<f64>,
    /// `J_{mu*(theta)}(pi; theta) + 2 K distance` per grid point.
    pub rhs: Vec<f64>,
    /// `J_{mu*(theta)}(pi; theta)` per grid point.
    pub optimal: Vec<f64>,
    pub grid: BeliefGrid,
    pub true_kernel: ActionKernel,
    pub estimated_policy: Policy,
}

impl KLBoundReport {
    /// `min_pi (rhs - lhs)`; negative means the bound is violated.
    pub fn worst_slack(&self) -> f64 {
        self.lhs.iter().zip(&self.rhs).map(|(l, r)| r - l).fold(f64::INFINITY, f64::min)
    }

    pub fn violations(&self, tol: f64) -> usize {
        self.lhs.iter().zip(&self.rhs).filter(|(l, r)| **l > **r + tol).count()
    }
}

pub fn bound_constant(scenario: &Scenario) -> f64 {
    scenario.costs.max_cost() / scenario.change.p()
}

/// Builds the true kernel from `scenario.params` and the estimated kernel
/// from `mixture`, solves both stopping problems and evaluates the estimated
/// policy on the true model.
pub fn sensitivity_bound_check(
    scenario: &Scenario,
    mixture: &ParameterMixture,
    grid: BeliefGrid,
    vi: &ValueIterationConfig,
    ss: &SteadyStateConfig,
) -> Result<KLBoundReport> {
    let s = scenario;
    let true_kernel = build_action_kernel_with(&s.frame, &s.params, &s.change, &s.obs, grid, ss)?;
    let hat_kernel = build_mismatched_kernel_with(&s.frame, mixture, &s.change, &s.obs, grid, ss)?;
    let (v_true, _) = value_iteration(&true_kernel, &s.change, &s.costs, vi)?;
    let (_, policy_hat) = value_iteration(&hat_kernel, &s.change, &s.costs, vi)?;
    let j_hat = evaluate_policy(&true_kernel, &s.change, &s.costs, &policy_hat, vi)?;
    let k = bound_constant(s);
    let distance = model_distance(&true_kernel, &hat_kernel, &s.change)?;
    let rhs = v_true
        .values()
        .iter()
        // K is infinite at p = 0; an exact model still gives a finite bound
        .map(|v| if distance == 0.0 { *v } else { v + 2.0 * k * distance })
        .collect();
    Ok(KLBoundReport {
        k,
        distance,
        lhs: j_hat.values().to_vec(),
        rhs,
        optimal: v_true.values().to_vec(),
        grid,
        true_kernel,
        estimated_policy: policy_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_conventions() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(kl_divergence(&[0.0, 1.0], &[0.5, 0.5]), 2f64.ln());
        assert_eq!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
        let (p, q) = ([0.9, 0.1], [0.6, 0.4]);
        assert!((kl_divergence(&p, &q) - kl_divergence(&q, &p)).abs() > 1e-3);
    }

    #[test]
    fn identical_kernels_have_zero_distance() {
        let grid = BeliefGrid::new(3).unwrap();
        let k = ActionKernel::from_table(grid, vec![[vec![0.2, 0.8], vec![0.7, 0.3]]; 4]).unwrap();
        assert_eq!(model_distance(&k, &k, &ChangeModel::new(0.9).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn distance_matches_hand_value() {
        let grid = BeliefGrid::new(1).unwrap();
        let k = ActionKernel::from_table(grid, vec![[vec![0.5, 0.5], vec![0.9, 0.1]]; 2]).unwrap();
        let kh = ActionKernel::from_table(grid, vec![[vec![0.5, 0.5], vec![0.6, 0.4]]; 2]).unwrap();
        let change = ChangeModel::new(0.8).unwrap();
        let d2 = kl_divergence(&[0.9, 0.1], &[0.6, 0.4]).sqrt();
        // row 1 of P puts nothing on state 2; row 2 puts p = 0.8 on it
        let expect = std::f64::consts::SQRT_2 * 0.8 * d2;
        assert!((model_distance(&k, &kh, &change).unwrap() - expect).abs() < 1e-15);
    }
}
