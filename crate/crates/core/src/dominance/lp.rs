//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min c'x` subject to `A_ub x <= b_ub`, `A_eq x = b_eq`, `x >= 0`.
//! Pivoting follows Bland's rule, so the method terminates on degenerate
//! problems.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over columns flagged in `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<()> {
        let max_pivots = 50 * (self.width + self.rows.len()) + 1000;
        for _ in 0..max_pivots {
            let entering = (0..self.width).find(|&j| {
                if !allowed[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j] - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
                reduced < -FEAS_EPS
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::NumericalFailure("linear program is unbounded".into()));
            };
            self.pivot(r, c);
        }
        Err(Error::NumericalFailure("simplex exceeded its pivot budget".into()))
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.cost.len();
        let n_ub = self.a_ub.len();
        let n_eq = self.a_eq.len();
        if self.b_ub.len() != n_ub || self.b_eq.len() != n_eq {
            return Err(Error::DimensionMismatch { what: "constraint right-hand side", expected: n_ub + n_eq, actual: self.b_ub.len() + self.b_eq.len() });
        }
        if self.a_ub.iter().chain(&self.a_eq).any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { what: "constraint row", expected: n, actual: 0 });
        }
        let m = n_ub + n_eq;
        // columns: x (n), slacks (n_ub), artificials (m), rhs
        let width = n + n_ub + m;
        let mut rows = Vec::with_capacity(m);
        for (k, (a, &b)) in self.a_ub.iter().zip(&self.b_ub).chain(self.a_eq.iter().zip(&self.b_eq)).enumerate() {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(a);
            if k < n_ub {
                row[n + k] = 1.0;
            }
            row[width] = b;
            if b < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            row[n + n_ub + k] = 1.0;
            rows.push(row);
        }
        let mut tab = Tableau { rows, basis: (n + n_ub..width).collect(), width };

        let mut phase1 = vec![0.0; width];
        for c in phase1.iter_mut().skip(n + n_ub) {
            *c = 1.0;
        }
        tab.optimize(&phase1, &vec![true; width])?;
        let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= n + n_ub).map(|i| tab.rhs(i)).sum();
        if infeasibility > FEAS_EPS {
            return Err(Error::Infeasible);
        }
        // Drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and dropped.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n + n_ub {
                match (0..n + n_ub).find(|&j| tab.rows[i][j].abs() > 1e-9) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let mut phase2 = vec![0.0; width];
        phase2[..n].copy_from_slice(&self.cost);
        let allowed: Vec<bool> = (0..width).map(|j| j < n + n_ub).collect();
        tab.optimize(&phase2, &allowed)?;

        let mut x = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.rhs(i).max(0.0);
            }
        }
        let objective = x.iter().zip(&self.cost).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective })
    }
}
