//! The detector's action likelihoods `R_{x,pi}(a)`.

use std::io::{Read, Write};

use rayon::prelude::*;

use super::model::{observation_likelihood, public_update_with, ChangeModel, ObservationModel};
use crate::error::{Error, Result};
use crate::io::{field, read_table, write_table, Metadata};
use crate::quantum::steady_state;
use crate::solver::BeliefGrid;
use crate::{BeliefVector, DecisionFrame, PsychParams, SteadyStateConfig};

/// `R_{x,pi}(a)` tabulated on a belief grid, together with the agent's
/// action distributions `Gamma_bar_y^pi` it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionKernel {
    grid: BeliefGrid,
    n_actions: usize,
    n_obs: usize,
    // table[(i * 2 + x) * A + a]
    table: Vec<f64>,
    // private[(i * Y + y) * A + a]; empty for kernels loaded from disk
    private: Vec<f64>,
}

impl ActionKernel {
    const ROW_TOL: f64 = 1e-9;

    /// `table[i][x][a]`. Rows are validated and renormalized.
    pub fn from_table(grid: BeliefGrid, table: Vec<[Vec<f64>; 2]>) -> Result<Self> {
        if table.len() != grid.len() {
            return Err(Error::DimensionMismatch { what: "kernel grid points", expected: grid.len(), actual: table.len() });
        }
        let n_actions = table[0][0].len();
        let mut flat = Vec::with_capacity(grid.len() * 2 * n_actions);
        for rows in &table {
            for row in rows {
                flat.extend(Self::checked_row(row, n_actions)?);
            }
        }
        Ok(Self { grid, n_actions, n_obs: 0, table: flat, private: Vec::new() })
    }

    fn checked_row(row: &[f64], n_actions: usize) -> Result<Vec<f64>> {
        if row.len() != n_actions {
            return Err(Error::DimensionMismatch { what: "kernel row", expected: n_actions, actual: row.len() });
        }
        if row.iter().any(|&r| !(r >= -1e-12) || !r.is_finite()) {
            return Err(Error::NumericalFailure(format!("kernel row has invalid entries {row:?}")));
        }
        let sum: f64 = row.iter().map(|r| r.max(0.0)).sum();
        if (sum - 1.0).abs() > Self::ROW_TOL {
            return Err(Error::NumericalFailure(format!("kernel row sums to {sum}")));
        }
        Ok(row.iter().map(|r| r.max(0.0) / sum).collect())
    }

    pub fn grid(&self) -> BeliefGrid {
        self.grid
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Observation count, or 0 when the per-observation distributions are
    /// not available.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// `R_{x,pi_i}(.)` with `x` zero-based (0 = post-change).
    pub fn row(&self, i: usize, x: usize) -> &[f64] {
        let start = (i * 2 + x) * self.n_actions;
        &self.table[start..start + self.n_actions]
    }

    /// `Gamma_bar_y^{pi_i}`, the agent's action distribution at the private
    /// belief `T(pi_i, y)`.
    pub fn private_distribution(&self, i: usize, y: usize) -> Option<&[f64]> {
        if self.private.is_empty() {
            return None;
        }
        let start = (i * self.n_obs + y) * self.n_actions;
        Some(&self.private[start..start + self.n_actions])
    }

    /// `(R_{1,pi}(a), R_{2,pi}(a))`, linearly interpolated in `pi(1)`.
    pub fn likelihoods(&self, pi1: f64, a: usize) -> [f64; 2] {
        let (i, w) = self.grid.locate(pi1);
        let at = |j: usize, x: usize| self.row(j, x)[a];
        if w == 0.0 {
            [at(i, 0), at(i, 1)]
        } else {
            [(1.0 - w) * at(i, 0) + w * at(i + 1, 0), (1.0 - w) * at(i, 1) + w * at(i + 1, 1)]
        }
    }

    pub fn max_row_defect(&self) -> f64 {
        self.table
            .chunks(self.n_actions)
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `sum_k w_k K_k` for kernels on a shared grid.
    pub fn mixture(parts: &[(ActionKernel, f64)]) -> Result<Self> {
        let (first, _) = parts.first().ok_or_else(|| Error::invalid("empty kernel mixture"))?;
        let mut out = Self {
            grid: first.grid,
            n_actions: first.n_actions,
            n_obs: first.n_obs,
            table: vec![0.0; first.table.len()],
            private: vec![0.0; first.private.len()],
        };
        for (k, w) in parts {
            if k.grid != out.grid || k.n_actions != out.n_actions {
                return Err(Error::invalid("kernels in a mixture must share grid and action set"));
            }
            for (o, v) in out.table.iter_mut().zip(&k.table) {
                *o += w * v;
            }
            if k.private.len() == out.private.len() && k.n_obs == out.n_obs {
                for (o, v) in out.private.iter_mut().zip(&k.private) {
                    *o += w * v;
                }
            } else {
                out.private.clear();
                out.n_obs = 0;
            }
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, out: W, meta: &Metadata) -> Result<()> {
        let rows = (0..self.grid.len()).flat_map(|i| {
            (0..2).flat_map(move |x| {
                (0..self.n_actions).map(move |a| {
                    vec![
                        self.grid.point(i).to_string(),
                        (x + 1).to_string(),
                        a.to_string(),
                        self.row(i, x)[a].to_string(),
                    ]
                })
            })
        });
        write_table(out, meta, &["pi1", "x", "a", "R"], rows)
    }

    /// Reads a kernel written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(input: R) -> Result<(Self, Metadata)> {
        let (meta, rows) = read_table(input, &["pi1", "x", "a", "R"])?;
        let mut n_actions = 0;
        for r in &rows {
            n_actions = n_actions.max(field::<usize>(r, 2)? + 1);
        }
        if n_actions == 0 || rows.len() % (2 * n_actions) != 0 || rows.len() < 4 * n_actions {
            return Err(Error::Parse("kernel table has an inconsistent number of rows".into()));
        }
        let grid = BeliefGrid::new(rows.len() / (2 * n_actions) - 1)?;
        let mut table = vec![f64::NAN; rows.len()];
        for r in &rows {
            let pi1: f64 = field(r, 0)?;
            let x: usize = field(r, 1)?;
            let a: usize = field(r, 2)?;
            let i = grid.nearest(pi1);
            if (grid.point(i) - pi1).abs() > 1e-12 || !(1..=2).contains(&x) {
                return Err(Error::Parse(format!("kernel row off the grid: pi1={pi1}, x={x}")));
            }
            table[(i * 2 + x - 1) * n_actions + a] = field(r, 3)?;
        }
        if table.iter().any(|v| v.is_nan()) {
            return Err(Error::Parse("kernel table has missing entries".into()));
        }
        let mut kernel = Self { grid, n_actions, n_obs: 0, table: Vec::new(), private: Vec::new() };
        for row in table.chunks(n_actions) {
            kernel.table.extend(Self::checked_row(row, n_actions).map_err(|e| Error::Parse(e.to_string()))?);
        }
        Ok((kernel, meta))
    }
}

/// Detector update `T_bar(pi, a)`, with `R` read from the kernel by linear
/// interpolation in `pi(1)`. Also returns `sigma_bar(pi, a)`.
pub fn public_belief_update(
    pi: &BeliefVector,
    a: usize,
    change: &ChangeModel,
    kernel: &ActionKernel,
) -> Result<(BeliefVector, f64)> {
    if pi.len() != 2 {
        return Err(Error::DimensionMismatch { what: "detection belief", expected: 2, actual: pi.len() });
    }
    if a >= kernel.n_actions() {
        return Err(Error::DimensionMismatch { what: "action index", expected: kernel.n_actions(), actual: a });
    }
    let pair = [pi.get(0), pi.get(1)];
    let (next, sigma) = public_update_with(pair, kernel.likelihoods(pair[0], a), change)
        .ok_or(Error::ImpossibleAction { action: a, pi1: pair[0] })?;
    Ok((BeliefVector::new(next.to_vec())?, sigma))
}

/// Private belief `T(pi, y)` used for the agent's steady state; falls back
/// to the prediction `P' pi` when `y` is impossible under `pi`.
pub(crate) fn agent_belief(pred: [f64; 2], y: usize, obs: &ObservationModel) -> [f64; 2] {
    let sigma = observation_likelihood(pred, y, obs);
    if sigma > 0.0 {
        let a = (obs.prob(0, y) * pred[0] / sigma).clamp(0.0, 1.0);
        [a, 1.0 - a]
    } else {
        pred
    }
}

fn check_frame(frame: &DecisionFrame) -> Result<()> {
    if frame.n_states() != 2 {
        return Err(Error::DimensionMismatch { what: "frame states for detection", expected: 2, actual: frame.n_states() });
    }
    Ok(())
}

pub fn build_action_kernel(
    frame: &DecisionFrame,
    params: &PsychParams,
    change: &ChangeModel,
    obs: &ObservationModel,
    grid: BeliefGrid,
) -> Result<ActionKernel> {
    build_action_kernel_with(frame, params, change, obs, grid, &SteadyStateConfig::default())
}

/// `R_{x,pi}(a) = sum_y Gamma_bar_y^pi(a) B_{x,y}` at every grid point.
pub fn build_action_kernel_with(
    frame: &DecisionFrame,
    params: &PsychParams,
    change: &ChangeModel,
    obs: &ObservationModel,
    grid: BeliefGrid,
    config: &SteadyStateConfig,
) -> Result<ActionKernel> {
    check_frame(frame)?;
    let n_actions = frame.n_actions();
    let n_obs = obs.n_obs();
    let per_point: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let pi1 = grid.point(i);
            let pred = change.predict([pi1, 1.0 - pi1]);
            let mut gammas = Vec::with_capacity(n_obs * n_actions);
            for y in 0..n_obs {
                let eta = BeliefVector::new(agent_belief(pred, y, obs).to_vec())?;
                let ss = steady_state(frame, params, &eta, config)
                    .map_err(|e| Error::Kernel { pi1, y, source: Box::new(e) })?;
                gammas.extend_from_slice(ss.gamma.as_slice());
            }
            Ok(gammas)
        })
        .collect::<Result<_>>()?;

    let mut table = Vec::with_capacity(grid.len() * 2 * n_actions);
    for gammas in &per_point {
        for x in 0..2 {
            let mut row = vec![0.0; n_actions];
            for y in 0..n_obs {
                let b = obs.prob(x, y);
                for (a, r) in row.iter_mut().enumerate() {
                    *r += gammas[y * n_actions + a] * b;
                }
            }
            table.extend(ActionKernel::checked_row(&row, n_actions)?);
        }
    }
    Ok(ActionKernel { grid, n_actions, n_obs, table, private: per_point.concat() })
}

/// Finite mixture of parameter triples with nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterMixture {
    atoms: Vec<(PsychParams, f64)>,
}

impl ParameterMixture {
    pub fn new(atoms: Vec<(PsychParams, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("parameter mixture has no atoms"));
        }
        if atoms.iter().any(|(_, w)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("mixture weights must be finite and >= 0"));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, expected 1")));
        }
        Ok(Self { atoms })
    }

    pub fn point(params: PsychParams) -> Self {
        Self { atoms: vec![(params, 1.0)] }
    }

    pub fn atoms(&self) -> &[(PsychParams, f64)] {
        &self.atoms
    }
}

pub fn build_mismatched_kernel(
    frame: &DecisionFrame,
    mixture: &ParameterMixture,
    change: &ChangeModel,
    obs: &ObservationModel,
    grid: BeliefGrid,
) -> Result<ActionKernel> {
    build_mismatched_kernel_with(frame, mixture, change, obs, grid, &SteadyStateConfig::default())
}

/// `R_hat = sum_k w_k R(theta_k)`, the kernel of a detector that averages
/// over its parameter uncertainty.
pub fn build_mismatched_kernel_with(
    frame: &DecisionFrame,
    mixture: &ParameterMixture,
    change: &ChangeModel,
    obs: &ObservationModel,
    grid: BeliefGrid,
    config: &SteadyStateConfig,
) -> Result<ActionKernel> {
    if let [(params, _)] = mixture.atoms() {
        return build_action_kernel_with(frame, params, change, obs, grid, config);
    }
    let parts = mixture
        .atoms()
        .iter()
        .map(|(params, w)| Ok((build_action_kernel_with(frame, params, change, obs, grid, config)?, *w)))
        .collect::<Result<Vec<_>>>()?;
    ActionKernel::mixture(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pd() -> DecisionFrame {
        DecisionFrame::prisoners_dilemma(20.0, 5.0, 10.0, 25.0).unwrap()
    }

    fn pd_obs() -> ObservationModel {
        ObservationModel::new(vec![0.6, 0.25, 0.15], vec![0.15, 0.25, 0.6]).unwrap()
    }

    #[test]
    fn rows_sum_to_one() {
        let params = PsychParams::new(0.812, 10.495, 0.9).unwrap();
        let k = build_action_kernel(&pd(), &params, &ChangeModel::new(0.95).unwrap(), &pd_obs(), BeliefGrid::new(20).unwrap())
            .unwrap();
        assert!(k.max_row_defect() < 1e-9);
        assert_eq!(k.n_obs(), 3);
    }

    #[test]
    fn belief_blind_agent_gives_equal_rows() {
        let params = PsychParams::new(0.6, 3.0, 0.0).unwrap();
        let k = build_action_kernel(&pd(), &params, &ChangeModel::new(0.9).unwrap(), &pd_obs(), BeliefGrid::new(10).unwrap())
            .unwrap();
        for i in 0..11 {
            for a in 0..2 {
                assert_relative_eq!(k.row(i, 0)[a], k.row(i, 1)[a], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn point_mixture_equals_plain_kernel() {
        let params = PsychParams::new(0.812, 10.495, 0.9).unwrap();
        let change = ChangeModel::new(0.95).unwrap();
        let grid = BeliefGrid::new(8).unwrap();
        let plain = build_action_kernel(&pd(), &params, &change, &pd_obs(), grid).unwrap();
        let mixed = build_mismatched_kernel(&pd(), &ParameterMixture::point(params), &change, &pd_obs(), grid).unwrap();
        assert_eq!(plain, mixed);
    }

    #[test]
    fn equal_weights_average_kernels() {
        let p1 = PsychParams::new(0.812, 10.495, 0.9).unwrap();
        let p2 = PsychParams::new(0.3, 40.0, 0.2).unwrap();
        let change = ChangeModel::new(0.95).unwrap();
        let grid = BeliefGrid::new(6).unwrap();
        let k1 = build_action_kernel(&pd(), &p1, &change, &pd_obs(), grid).unwrap();
        let k2 = build_action_kernel(&pd(), &p2, &change, &pd_obs(), grid).unwrap();
        let mix = ParameterMixture::new(vec![(p1, 0.5), (p2, 0.5)]).unwrap();
        let km = build_mismatched_kernel(&pd(), &mix, &change, &pd_obs(), grid).unwrap();
        for i in 0..grid.len() {
            for x in 0..2 {
                for a in 0..2 {
                    assert_relative_eq!(km.row(i, x)[a], 0.5 * (k1.row(i, x)[a] + k2.row(i, x)[a]), epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn mixture_weights_validated() {
        let p = PsychParams::new(0.5, 1.0, 0.5).unwrap();
        assert!(ParameterMixture::new(vec![(p, 0.5), (p, 0.6)]).is_err());
        assert!(ParameterMixture::new(vec![(p, -0.5), (p, 1.5)]).is_err());
        assert!(ParameterMixture::new(vec![]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let params = PsychParams::new(0.812, 10.495, 0.9).unwrap();
        let k = build_action_kernel(&pd(), &params, &ChangeModel::new(0.95).unwrap(), &pd_obs(), BeliefGrid::new(5).unwrap())
            .unwrap();
        let mut meta = Metadata::new();
        meta.insert("config_hash".into(), "deadbeef".into());
        let mut buf = Vec::new();
        k.write_csv(&mut buf, &meta).unwrap();
        let (back, m) = ActionKernel::read_csv(buf.as_slice()).unwrap();
        assert_eq!(m["config_hash"], "deadbeef");
        assert_eq!(back.grid(), k.grid());
        for i in 0..6 {
            for x in 0..2 {
                assert_eq!(back.row(i, x), k.row(i, x));
            }
        }
    }

    #[test]
    fn public_update_rejects_zero_likelihood() {
        let grid = BeliefGrid::new(1).unwrap();
        let k = ActionKernel::from_table(grid, vec![[vec![1.0, 0.0], vec![1.0, 0.0]]; 2]).unwrap();
        let change = ChangeModel::new(0.5).unwrap();
        let pi = BeliefVector::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(public_belief_update(&pi, 1, &change, &k), Err(Error::ImpossibleAction { action: 1, .. })));
        let (next, sigma) = public_belief_update(&pi, 0, &change, &k).unwrap();
        assert_eq!(sigma, 1.0);
        assert_relative_eq!(next.get(0), 0.75, epsilon = 1e-15);
    }
}
