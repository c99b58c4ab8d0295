use std::io::{Read, Write};

use super::grid::BeliefGrid;
use crate::error::{Error, Result};
use crate::io::{field, read_table, write_table, Metadata};

/// Detector decision `u`: `1` announces the change, `2` waits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Stop,
    Continue,
}

impl Decision {
    pub fn code(self) -> u8 {
        match self {
            Decision::Stop => 1,
            Decision::Continue => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(Decision::Stop),
            2 => Ok(Decision::Continue),
            other => Err(Error::Parse(format!("decision code must be 1 or 2, got {other}"))),
        }
    }
}

/// Outcome of scanning a policy for a single threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    /// Smallest stopping grid point, present only when the stop set is an
    /// up-set in `pi(1)`.
    pub threshold: Option<f64>,
    /// Number of decision changes along the grid.
    pub crossings: usize,
}

/// Stop/continue rule on a belief grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    grid: BeliefGrid,
    decisions: Vec<Decision>,
    report: ThresholdReport,
}

impl Policy {
    pub fn new(grid: BeliefGrid, decisions: Vec<Decision>) -> Result<Self> {
        if decisions.len() != grid.len() {
            return Err(Error::DimensionMismatch { what: "policy grid points", expected: grid.len(), actual: decisions.len() });
        }
        let report = threshold_of(&grid, &decisions);
        Ok(Self { grid, decisions, report })
    }

    pub fn always_stop(grid: BeliefGrid) -> Self {
        Self::new(grid, vec![Decision::Stop; grid.len()]).expect("sized to grid")
    }

    /// Stop iff `pi(1) >= threshold`.
    pub fn threshold_rule(grid: BeliefGrid, threshold: f64) -> Self {
        let decisions = grid
            .points()
            .map(|p| if p >= threshold { Decision::Stop } else { Decision::Continue })
            .collect();
        Self::new(grid, decisions).expect("sized to grid")
    }

    pub fn grid(&self) -> BeliefGrid {
        self.grid
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn at(&self, i: usize) -> Decision {
        self.decisions[i]
    }

    pub fn threshold(&self) -> Option<f64> {
        self.report.threshold
    }

    pub fn report(&self) -> ThresholdReport {
        self.report
    }

    /// Decision at an arbitrary belief: the threshold rule when there is
    /// one, otherwise the nearest grid point.
    pub fn decide(&self, pi1: f64) -> Decision {
        match self.report.threshold {
            Some(t) => {
                if pi1 >= t {
                    Decision::Stop
                } else {
                    Decision::Continue
                }
            }
            None => self.decisions[self.grid.nearest(pi1)],
        }
    }

    pub fn write_csv<W: Write>(&self, out: W, meta: &Metadata) -> Result<()> {
        let mut meta = meta.clone();
        if let Some(t) = self.report.threshold {
            meta.insert("threshold".into(), t.to_string());
        }
        let rows = self
            .decisions
            .iter()
            .enumerate()
            .map(|(i, u)| vec![self.grid.point(i).to_string(), u.code().to_string()]);
        write_table(out, &meta, &["pi1", "u"], rows)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<(Self, Metadata)> {
        let (meta, rows) = read_table(input, &["pi1", "u"])?;
        if rows.len() < 2 {
            return Err(Error::Parse("policy table needs at least two rows".into()));
        }
        let grid = BeliefGrid::new(rows.len() - 1)?;
        let mut decisions = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let pi1: f64 = field(r, 0)?;
            if (pi1 - grid.point(i)).abs() > 1e-12 {
                return Err(Error::Parse(format!("policy row {i} is off the grid: pi1={pi1}")));
            }
            decisions.push(Decision::from_code(field(r, 1)?)?);
        }
        Ok((Self::new(grid, decisions)?, meta))
    }
}

fn threshold_of(grid: &BeliefGrid, decisions: &[Decision]) -> ThresholdReport {
    let crossings = decisions.windows(2).filter(|w| w[0] != w[1]).count();
    let first_stop = decisions.iter().position(|&u| u == Decision::Stop);
    let up_set = match first_stop {
        Some(i) => decisions[i..].iter().all(|&u| u == Decision::Stop),
        None => false,
    };
    ThresholdReport { threshold: if up_set { first_stop.map(|i| grid.point(i)) } else { None }, crossings }
}

/// Single-threshold structure of a policy.
pub fn extract_threshold(policy: &Policy) -> ThresholdReport {
    policy.report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Decision::{Continue as C, Stop as S};

    #[test]
    fn all_stop_threshold_is_zero() {
        let p = Policy::always_stop(BeliefGrid::new(4).unwrap());
        assert_eq!(extract_threshold(&p), ThresholdReport { threshold: Some(0.0), crossings: 0 });
    }

    #[test]
    fn stop_continue_stop_has_no_threshold() {
        let p = Policy::new(BeliefGrid::new(2).unwrap(), vec![S, C, S]).unwrap();
        assert_eq!(extract_threshold(&p), ThresholdReport { threshold: None, crossings: 2 });
    }

    #[test]
    fn down_set_is_not_a_threshold() {
        let p = Policy::new(BeliefGrid::new(2).unwrap(), vec![S, S, C]).unwrap();
        assert_eq!(extract_threshold(&p).threshold, None);
        assert_eq!(extract_threshold(&p).crossings, 1);
    }

    #[test]
    fn threshold_rule_roundtrip() {
        let grid = BeliefGrid::new(10).unwrap();
        let p = Policy::threshold_rule(grid, 0.35);
        assert_eq!(p.threshold(), Some(0.4));
        assert_eq!(p.decide(0.39), C);
        assert_eq!(p.decide(0.4), S);
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &Metadata::new()).unwrap();
        let (back, meta) = Policy::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, p);
        assert_eq!(meta["threshold"], "0.4");
    }
}
