//! Garbling certificates `Gamma_y = Gamma_hat_y M` and convex mixtures of
//! garbling matrices.

use nalgebra::DMatrix;

use super::lp::LinearProgram;
use crate::error::{Error, Result};

/// A row-stochastic `M` with `Gamma_y(a) ~ sum_i Gamma_hat_y(i) M(i, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceCertificate {
    pub m: DMatrix<f64>,
    /// `max_{y,a} |Gamma_y(a) - (Gamma_hat_y M)(a)|`.
    pub residual: f64,
    /// Largest `|row sum - 1|` of `M`.
    pub row_sum_defect: f64,
    /// Most negative entry of `M` (0 when there is none).
    pub min_entry: f64,
}

impl DominanceCertificate {
    pub const STOCHASTIC_TOL: f64 = 1e-9;

    fn measure(m: DMatrix<f64>, gamma_hat: &[Vec<f64>], gamma: &[Vec<f64>]) -> Self {
        let residual = garbling_residual(&m, gamma_hat, gamma);
        let (row_sum_defect, min_entry) = stochasticity_defect(&m);
        Self { m, residual, row_sum_defect, min_entry }
    }

    pub fn is_stochastic(&self) -> bool {
        self.row_sum_defect <= Self::STOCHASTIC_TOL && self.min_entry >= -Self::STOCHASTIC_TOL
    }

    /// `M^{-1}` and its worst row-sum and column-sum deviations from one,
    /// when `M` is invertible.
    pub fn inverse_defects(&self) -> Option<(DMatrix<f64>, f64, f64)> {
        let det = self.m.determinant();
        if det.abs() < 1e-10 {
            return None;
        }
        let inv = self.m.clone().try_inverse()?;
        let rows = inv.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
        let cols = inv.column_iter().map(|c| (c.sum() - 1.0).abs()).fold(0.0, f64::max);
        Some((inv, rows, cols))
    }
}

/// `max_{y,a} |Gamma_y(a) - sum_i Gamma_hat_y(i) M(i,a)|`.
pub fn garbling_residual(m: &DMatrix<f64>, gamma_hat: &[Vec<f64>], gamma: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (gh, g) in gamma_hat.iter().zip(gamma) {
        for a in 0..m.ncols() {
            let mixed: f64 = gh.iter().enumerate().map(|(i, p)| p * m[(i, a)]).sum();
            worst = worst.max((g[a] - mixed).abs());
        }
    }
    worst
}

/// `(max |row sum - 1|, min(0, min entry))`.
pub fn stochasticity_defect(m: &DMatrix<f64>) -> (f64, f64) {
    let rows = m.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    let min = m.iter().copied().fold(0.0, f64::min);
    (rows, min)
}

fn check_families(gamma_hat: &[Vec<f64>], gamma: &[Vec<f64>]) -> Result<usize> {
    if gamma_hat.is_empty() {
        return Err(Error::invalid("no observations in the action families"));
    }
    if gamma_hat.len() != gamma.len() {
        return Err(Error::DimensionMismatch { what: "observation count", expected: gamma_hat.len(), actual: gamma.len() });
    }
    let n_actions = gamma_hat[0].len();
    for g in gamma_hat.iter().chain(gamma) {
        if g.len() != n_actions {
            return Err(Error::DimensionMismatch { what: "action count", expected: n_actions, actual: g.len() });
        }
    }
    Ok(n_actions)
}

/// Row-stochastic `M` minimizing the worst garbling residual over all `y`
/// simultaneously.
pub fn best_garbling(gamma_hat: &[Vec<f64>], gamma: &[Vec<f64>]) -> Result<DominanceCertificate> {
    let n_actions = check_families(gamma_hat, gamma)?;
    if n_actions == 2 {
        return Ok(DominanceCertificate::measure(best_two_action_garbling(gamma_hat, gamma), gamma_hat, gamma));
    }
    let a2 = n_actions * n_actions;
    // variables: M(i, a) at i * A + a, then the bound t
    let n_vars = a2 + 1;
    let mut cost = vec![0.0; n_vars];
    cost[a2] = 1.0;
    let mut lp = LinearProgram { cost, ..Default::default() };
    for (gh, g) in gamma_hat.iter().zip(gamma) {
        for a in 0..n_actions {
            let mut row = vec![0.0; n_vars];
            for (i, p) in gh.iter().enumerate() {
                row[i * n_actions + a] = *p;
            }
            // (Gamma_hat M)(a) - Gamma(a) <= t and Gamma(a) - (Gamma_hat M)(a) <= t
            let mut upper = row.clone();
            upper[a2] = -1.0;
            lp.a_ub.push(upper);
            lp.b_ub.push(g[a]);
            let mut lower: Vec<f64> = row.iter().map(|v| -v).collect();
            lower[a2] = -1.0;
            lp.a_ub.push(lower);
            lp.b_ub.push(-g[a]);
        }
    }
    for i in 0..n_actions {
        let mut row = vec![0.0; n_vars];
        for a in 0..n_actions {
            row[i * n_actions + a] = 1.0;
        }
        lp.a_eq.push(row);
        lp.b_eq.push(1.0);
    }
    let sol = lp.solve()?;
    let mut m = DMatrix::from_fn(n_actions, n_actions, |i, a| sol.x[i * n_actions + a].max(0.0));
    for i in 0..n_actions {
        let s = m.row(i).sum();
        if s > 0.0 {
            for a in 0..n_actions {
                m[(i, a)] /= s;
            }
        }
    }
    Ok(DominanceCertificate::measure(m, gamma_hat, gamma))
}

/// Two actions leave two free scalars, `M = [[m1, 1-m1], [m2, 1-m2]]`, and
/// both columns carry the same residual up to sign. The optimum of
/// `min t s.t. |r_y(m1, m2)| <= t, 0 <= m <= 1` sits on a vertex where three
/// constraints are active, so every such vertex is tried and the one with
/// the smallest measured residual kept.
fn best_two_action_garbling(gamma_hat: &[Vec<f64>], gamma: &[Vec<f64>]) -> DMatrix<f64> {
    // constraints as (c1, c2, ct, rhs) meaning c1 m1 + c2 m2 + ct t = rhs
    let mut planes: Vec<[f64; 4]> = Vec::with_capacity(2 * gamma.len() + 4);
    for (gh, g) in gamma_hat.iter().zip(gamma) {
        planes.push([gh[0], gh[1], 1.0, g[0]]);
        planes.push([gh[0], gh[1], -1.0, g[0]]);
    }
    planes.extend([[1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 1.0]]);
    let residual = |m1: f64, m2: f64| {
        gamma_hat.iter().zip(gamma).map(|(gh, g)| (g[0] - gh[0] * m1 - gh[1] * m2).abs()).fold(0.0, f64::max)
    };
    let mut best = (residual(1.0, 0.0), 1.0, 0.0);
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            for k in j + 1..planes.len() {
                let a = nalgebra::Matrix3::from_fn(|r, c| [planes[i], planes[j], planes[k]][r][c]);
                let b = nalgebra::Vector3::new(planes[i][3], planes[j][3], planes[k][3]);
                let Some(x) = a.lu().solve(&b) else { continue };
                if !x.iter().all(|v| v.is_finite()) {
                    continue;
                }
                let (m1, m2) = (x[0].clamp(0.0, 1.0), x[1].clamp(0.0, 1.0));
                let r = residual(m1, m2);
                if r < best.0 {
                    best = (r, m1, m2);
                }
            }
        }
    }
    let (_, m1, m2) = best;
    DMatrix::from_row_slice(2, 2, &[m1, 1.0 - m1, m2, 1.0 - m2])
}

/// A certificate that `gamma_hat` Blackwell-dominates `gamma` within `eps`,
/// or `None`.
pub fn find_dominance_matrix(
    gamma_hat: &[Vec<f64>],
    gamma: &[Vec<f64>],
    eps: f64,
) -> Result<Option<DominanceCertificate>> {
    let cert = best_garbling(gamma_hat, gamma)?;
    Ok((cert.residual <= eps && cert.is_stochastic()).then_some(cert))
}

/// `M3(i, a) = w_a M1(i, a) + (1 - w_a) M2(i, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMatrix {
    pub m: DMatrix<f64>,
    pub row_sum_defect: f64,
    pub min_entry: f64,
}

pub fn convex_mixture_matrix(m1: &DMatrix<f64>, m2: &DMatrix<f64>, weights: &[f64]) -> Result<MixtureMatrix> {
    if m1.shape() != m2.shape() {
        return Err(Error::DimensionMismatch { what: "mixture matrix columns", expected: m1.ncols(), actual: m2.ncols() });
    }
    if weights.len() != m1.ncols() {
        return Err(Error::DimensionMismatch { what: "mixture weights", expected: m1.ncols(), actual: weights.len() });
    }
    if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::invalid("mixture weights must lie in [0,1]"));
    }
    let m = DMatrix::from_fn(m1.nrows(), m1.ncols(), |i, a| weights[a] * m1[(i, a)] + (1.0 - weights[a]) * m2[(i, a)]);
    let (row_sum_defect, min_entry) = stochasticity_defect(&m);
    Ok(MixtureMatrix { m, row_sum_defect, min_entry })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_families_admit_identity() {
        let g = vec![vec![0.3, 0.7], vec![0.6, 0.4], vec![0.9, 0.1]];
        let cert = find_dominance_matrix(&g, &g, 1e-9).unwrap().unwrap();
        assert!(cert.residual < 1e-12);
        assert!(cert.is_stochastic());
    }

    #[test]
    fn point_mass_garbles_to_anything() {
        let gh = vec![vec![1.0, 0.0]; 3];
        let g = vec![vec![0.3, 0.7]; 3];
        let cert = find_dominance_matrix(&gh, &g, 1e-9).unwrap().unwrap();
        assert!((cert.m[(0, 0)] - 0.3).abs() < 1e-12);
        assert!((cert.m[(0, 1)] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn uninformative_cannot_dominate_informative() {
        let gh = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let g = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
        assert!(find_dominance_matrix(&gh, &g, 1e-6).unwrap().is_none());
        // the reverse garbling exists
        assert!(find_dominance_matrix(&g, &gh, 1e-9).unwrap().is_some());
        let best = best_garbling(&gh, &g).unwrap();
        assert!((best.residual - 0.4).abs() < 1e-9);
    }

    #[test]
    fn mismatched_families_rejected() {
        assert!(best_garbling(&[vec![1.0, 0.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(best_garbling(&[vec![1.0, 0.0]], &[vec![1.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn three_action_garbling_recovered() {
        let m_true = DMatrix::from_row_slice(3, 3, &[0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.0, 0.3, 0.7]);
        let gh = vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.1, 0.8], vec![0.3, 0.6, 0.1]];
        let g: Vec<Vec<f64>> = gh
            .iter()
            .map(|r| (0..3).map(|a| (0..3).map(|i| r[i] * m_true[(i, a)]).sum()).collect())
            .collect();
        let cert = find_dominance_matrix(&gh, &g, 1e-9).unwrap().unwrap();
        assert!(cert.residual < 1e-9);
    }

    #[test]
    fn mixture_endpoints_and_defect() {
        let m1 = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let m2 = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.4, 0.6]);
        assert_eq!(convex_mixture_matrix(&m1, &m2, &[1.0, 1.0]).unwrap().m, m1);
        assert_eq!(convex_mixture_matrix(&m1, &m2, &[0.0, 0.0]).unwrap().m, m2);
        let skew = convex_mixture_matrix(&m1, &m2, &[1.0, 0.0]).unwrap();
        assert!((skew.row_sum_defect - 0.4).abs() < 1e-12);
        assert!(convex_mixture_matrix(&m1, &m2, &[1.5, 0.0]).is_err());
    }

    #[test]
    fn inverse_rows_always_sum_to_one() {
        let m = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.3, 0.7]);
        let cert = DominanceCertificate::measure(m, &[vec![1.0, 0.0]], &[vec![0.9, 0.1]]);
        let (_, rows, cols) = cert.inverse_defects().unwrap();
        assert!(rows < 1e-12);
        assert!(cols > 0.1);
    }
}
