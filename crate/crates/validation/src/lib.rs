//! Reference scenarios and a small pass/fail ledger for end-to-end
//! validation runs.
//!
//! The scenarios here are the published prisoner's dilemma setting: payoffs
//! `(20, 5, 10, 25)`, agent `(0.812, 10.495, 0.9)`, `p = 0.95`, `d = 1` and a
//! three-outcome sensor.

use std::fmt;
use std::time::{Duration, Instant};

use quickdet::protocol::{ChangeModel, DetectionCosts, ObservationModel, Scenario};
use quickdet::{DecisionFrame, PsychParams};

pub const ALPHA: f64 = 0.812;
pub const LAMBDA: f64 = 10.495;
pub const PHI: f64 = 0.9;
pub const P_STAY: f64 = 0.95;

pub fn prisoners_dilemma() -> DecisionFrame {
    DecisionFrame::prisoners_dilemma(20.0, 5.0, 10.0, 25.0).expect("positive payoffs")
}

pub fn sensor() -> ObservationModel {
    ObservationModel::new(vec![0.6, 0.25, 0.15], vec![0.15, 0.25, 0.6]).expect("stochastic rows")
}

pub fn agent() -> PsychParams {
    PsychParams::new(ALPHA, LAMBDA, PHI).expect("in range")
}

/// Reference scenario with false-alarm penalty `f` and unit delay cost.
pub fn scenario(f: f64) -> Scenario {
    Scenario {
        frame: prisoners_dilemma(),
        params: agent(),
        change: ChangeModel::new(P_STAY).expect("in range"),
        obs: sensor(),
        costs: DetectionCosts::new(f, 1.0).expect("nonnegative"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail,
}

/// One sub-check of a criterion: what was measured against what target.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { label: label.into(), passed, detail: detail.into() }
    }

    /// `|value - target| <= tol`.
    pub fn within(label: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let passed = (value - target).abs() <= tol;
        Self::new(label, passed, format!("{value:.4} vs {target}+-{tol}"))
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
    pub error: Option<String>,
}

impl Verdict {
    pub fn outcome(&self) -> Outcome {
        if self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.passed) {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.outcome() {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
        };
        write!(f, "criterion {} [{}] {tag} ({:.1}s)", self.id, self.title, self.elapsed.as_secs_f64())?;
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        for c in &self.checks {
            write!(f, "; {} {} ({})", c.label, if c.passed { "ok" } else { "FAILED" }, c.detail)?;
        }
        Ok(())
    }
}

/// Runs criteria in order and prints one line per criterion as it finishes.
#[derive(Debug, Default)]
pub struct Ledger {
    pub verdicts: Vec<Verdict>,
}

impl Ledger {
    pub fn run<F>(&mut self, id: u32, title: &str, body: F)
    where
        F: FnOnce() -> Result<Vec<Check>, quickdet::Error>,
    {
        let start = Instant::now();
        let (checks, error) = match body() {
            Ok(checks) => (checks, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let verdict = Verdict { id, title: title.to_string(), checks, elapsed: start.elapsed(), error };
        println!("{verdict}");
        self.verdicts.push(verdict);
    }

    pub fn failures(&self) -> Vec<u32> {
        self.verdicts.iter().filter(|v| v.outcome() == Outcome::Fail).map(|v| v.id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_line_lists_every_check() {
        let mut ledger = Ledger::default();
        ledger.run(7, "demo", || Ok(vec![Check::within("x", 0.5, 0.5, 0.0), Check::new("y", false, "bad")]));
        let line = ledger.verdicts[0].to_string();
        assert!(line.starts_with("criterion 7 [demo] FAIL"));
        assert!(line.contains("x ok") && line.contains("y FAILED (bad)"));
        assert_eq!(ledger.failures(), vec![7]);
    }

    #[test]
    fn errors_and_empty_runs_fail() {
        let mut ledger = Ledger::default();
        ledger.run(1, "err", || Err(quickdet::Error::Infeasible));
        ledger.run(2, "empty", || Ok(Vec::new()));
        ledger.run(3, "ok", || Ok(vec![Check::new("z", true, "")]));
        assert_eq!(ledger.failures(), vec![1, 2]);
    }

    #[test]
    fn reference_scenario_is_valid() {
        let s = scenario(5.0);
        assert_eq!(s.change.p(), P_STAY);
        assert_eq!(s.obs.n_obs(), 3);
    }
}
