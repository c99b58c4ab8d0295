//! Sure-thing principle sweep over the belief coupling `phi`.
//!
//! The certain cases (the agent knows the opponent's move) are solved on the
//! single-state frame with no belief coupling, which is the classical
//! Markov limit. The uncertain case uses the full frame at a uniform belief.
//! Total probability requires the uncertain defection probability to lie
//! between the two certain ones; rows where it does not are flagged.

use super::frame::{BeliefVector, DecisionFrame, PsychParams};
use super::steady::{steady_state, SteadyStateConfig};
use crate::error::{Error, Result};

/// Action and state index of defection in a two-by-two frame.
pub const DEFECT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SureThingRow {
    pub phi: f64,
    /// `P(defect | opponent defects)` from the certain-state frame.
    pub defect_if_defect: f64,
    /// `P(defect | opponent cooperates)` from the certain-state frame.
    pub defect_if_cooperate: f64,
    /// `P(defect)` at `eta = (0.5, 0.5)` on the full frame.
    pub defect_if_unknown: f64,
    /// Full-frame value at `eta = e_defect`, for comparison.
    pub full_if_defect: f64,
    /// Full-frame value at `eta = e_cooperate`.
    pub full_if_cooperate: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SureThingSweep {
    pub rows: Vec<SureThingRow>,
}

impl SureThingSweep {
    /// Smallest swept `phi` from which every later row is flagged.
    pub fn onset(&self) -> Option<f64> {
        let last_clean = self.rows.iter().rposition(|r| !r.violation);
        match last_clean {
            None => self.rows.first().map(|r| r.phi),
            Some(i) => self.rows.get(i + 1).map(|r| r.phi),
        }
    }
}

/// `P(defect)` when the opponent's move `state` is known, on the one-state
/// frame at `phi = 0`.
pub fn certain_defection(frame: &DecisionFrame<f64>, alpha: f64, lambda: f64, state: usize, cfg: &SteadyStateConfig<f64>) -> Result<f64> {
    check_two_by_two(frame)?;
    let sub = DecisionFrame::new((0..2).map(|a| vec![frame.utility(a, state)]).collect())?;
    let params = PsychParams::new(alpha, lambda, 0.0)?;
    let eta = BeliefVector::point_mass(1, 0)?;
    Ok(steady_state(&sub, &params, &eta, cfg)?.gamma.get(DEFECT))
}

fn check_two_by_two(frame: &DecisionFrame<f64>) -> Result<()> {
    if frame.n_states() != 2 || frame.n_actions() != 2 {
        return Err(Error::invalid("the sure-thing sweep needs a two-state, two-action frame"));
    }
    Ok(())
}

pub fn sure_thing_sweep(
    frame: &DecisionFrame<f64>,
    alpha: f64,
    lambda: f64,
    phis: &[f64],
    cfg: &SteadyStateConfig<f64>,
) -> Result<SureThingSweep> {
    check_two_by_two(frame)?;
    let if_defect = certain_defection(frame, alpha, lambda, DEFECT, cfg)?;
    let if_cooperate = certain_defection(frame, alpha, lambda, 1 - DEFECT, cfg)?;
    let (lo, hi) = (if_defect.min(if_cooperate), if_defect.max(if_cooperate));
    let unknown = BeliefVector::uniform(2)?;
    let e_defect = BeliefVector::point_mass(2, DEFECT)?;
    let e_coop = BeliefVector::point_mass(2, 1 - DEFECT)?;
    let mut rows = Vec::with_capacity(phis.len());
    for &phi in phis {
        let params = PsychParams::new(alpha, lambda, phi)?;
        let at = |eta: &BeliefVector<f64>| steady_state(frame, &params, eta, cfg).map(|s| s.gamma.get(DEFECT));
        let u = at(&unknown)?;
        rows.push(SureThingRow {
            phi,
            defect_if_defect: if_defect,
            defect_if_cooperate: if_cooperate,
            defect_if_unknown: u,
            full_if_defect: at(&e_defect)?,
            full_if_cooperate: at(&e_coop)?,
            violation: u < lo - 1e-9 || u > hi + 1e-9,
        });
    }
    Ok(SureThingSweep { rows })
}

/// `n` evenly spaced points on `[0, 1]`.
pub fn unit_sweep(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}
