//! Change model, sensor observation model, costs and the two Bayesian
//! filters.
//!
//! State `x = 1` (index 0) is the absorbing post-change state and `x = 2`
//! (index 1) the pre-change state. Beliefs are carried as `[pi(1), pi(2)]`.

use crate::error::{Error, Result};
use crate::BeliefVector;

/// Tolerance for row sums of user-supplied stochastic tables.
const ROW_TOL: f64 = 1e-12;

/// Geometric change time: `P = [[1, 0], [1 - p, p]]`, `pi0 = (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeModel {
    p: f64,
}

impl ChangeModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::invalid(format!("persistence p must lie in [0,1), got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn transition(&self) -> [[f64; 2]; 2] {
        [[1.0, 0.0], [1.0 - self.p, self.p]]
    }

    pub fn initial_belief(&self) -> BeliefVector {
        BeliefVector::point_mass(2, 1).expect("two states")
    }

    /// `P' pi`.
    pub fn predict(&self, pi: [f64; 2]) -> [f64; 2] {
        [pi[0] + (1.0 - self.p) * pi[1], self.p * pi[1]]
    }

    /// `E[tau0] = 1 / (1 - p)`.
    pub fn mean_change_time(&self) -> f64 {
        1.0 / (1.0 - self.p)
    }
}

/// Finite observation channel `B[x][y] = p(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    rows: [Vec<f64>; 2],
}

impl ObservationModel {
    pub fn new(post_change: Vec<f64>, pre_change: Vec<f64>) -> Result<Self> {
        if post_change.is_empty() {
            return Err(Error::invalid("observation model has no outcomes"));
        }
        if post_change.len() != pre_change.len() {
            return Err(Error::DimensionMismatch {
                what: "observation row",
                expected: post_change.len(),
                actual: pre_change.len(),
            });
        }
        for row in [&post_change, &pre_change] {
            if row.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
                return Err(Error::invalid("observation probabilities must be finite and >= 0"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::invalid(format!("observation row sums to {sum}, expected 1")));
            }
        }
        Ok(Self { rows: [post_change, pre_change] })
    }

    /// `rows[x][y]`, `x = 0` post-change.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != 2 {
            return Err(Error::DimensionMismatch { what: "observation rows", expected: 2, actual: rows.len() });
        }
        Self::new(rows[0].clone(), rows[1].clone())
    }

    pub fn n_obs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }
}

/// False-alarm penalty `f` and per-step delay penalty `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionCosts {
    pub f: f64,
    pub d: f64,
}

impl DetectionCosts {
    /// `f = 0` is accepted (stopping is then free); `d` must be positive.
    pub fn new(f: f64, d: f64) -> Result<Self> {
        if !(f >= 0.0) || !f.is_finite() {
            return Err(Error::invalid(format!("false alarm penalty must be finite and >= 0, got {f}")));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::invalid(format!("delay penalty must be finite and > 0, got {d}")));
        }
        Ok(Self { f, d })
    }

    /// `C(pi, stop) = f pi(2)`.
    pub fn stop_cost(&self, pi1: f64) -> f64 {
        self.f * (1.0 - pi1)
    }

    /// `C(pi, continue) = d pi(1)`.
    pub fn continue_cost(&self, pi1: f64) -> f64 {
        self.d * pi1
    }

    /// `max_{i,u} C(e_i, u)`.
    pub fn max_cost(&self) -> f64 {
        self.f.max(self.d)
    }
}

fn as_pair(pi: &BeliefVector) -> Result<[f64; 2]> {
    if pi.len() != 2 {
        return Err(Error::DimensionMismatch { what: "detection belief", expected: 2, actual: pi.len() });
    }
    Ok([pi.get(0), pi.get(1)])
}

fn normalized(v: [f64; 2], sigma: f64) -> BeliefVector {
    let a = (v[0] / sigma).clamp(0.0, 1.0);
    BeliefVector::new(vec![a, 1.0 - a]).expect("clamped pair is a belief")
}

/// `sigma(pi, y) = 1' B_y P' pi` on the pair form of the belief.
pub(crate) fn observation_likelihood(pred: [f64; 2], y: usize, obs: &ObservationModel) -> f64 {
    obs.prob(0, y) * pred[0] + obs.prob(1, y) * pred[1]
}

/// Sensor update `T(pi, y) = B_y P' pi / sigma(pi, y)`; also returns `sigma`.
pub fn private_belief_update(
    pi: &BeliefVector,
    y: usize,
    change: &ChangeModel,
    obs: &ObservationModel,
) -> Result<(BeliefVector, f64)> {
    if y >= obs.n_obs() {
        return Err(Error::DimensionMismatch { what: "observation index", expected: obs.n_obs(), actual: y });
    }
    let pair = as_pair(pi)?;
    let pred = change.predict(pair);
    let sigma = observation_likelihood(pred, y, obs);
    if !(sigma > 0.0) {
        return Err(Error::ImpossibleObservation { y, pi1: pair[0] });
    }
    Ok((normalized([obs.prob(0, y) * pred[0], obs.prob(1, y) * pred[1]], sigma), sigma))
}

/// Detector update `T_bar(pi, a) = R_pi(a) P' pi / sigma_bar(pi, a)` given
/// the likelihoods `r = (R_{1,pi}(a), R_{2,pi}(a))`; also returns
/// `sigma_bar`.
pub fn public_update_with(pi: [f64; 2], r: [f64; 2], change: &ChangeModel) -> Option<([f64; 2], f64)> {
    let pred = change.predict(pi);
    let sigma = r[0] * pred[0] + r[1] * pred[1];
    if !(sigma > 0.0) {
        return None;
    }
    let a = (r[0] * pred[0] / sigma).clamp(0.0, 1.0);
    Some(([a, 1.0 - a], sigma))
}
