//! Experiment configuration read from TOML.
//!
//! ```toml
//! [frame]
//! utility = [[20.0, 5.0], [25.0, 10.0]]   # utility[action][state]
//!
//! [agent]
//! alpha = 0.812
//! lambda = 10.495
//! phi = 0.9
//!
//! [change]
//! p = 0.95
//!
//! [observation]
//! post_change = [0.6, 0.25, 0.15]
//! pre_change = [0.15, 0.25, 0.6]
//!
//! [costs]
//! f = 5.0
//! d = 1.0
//! ```
//!
//! Optional sections: `[solver]` (grid, tol, max_iter), `[experiment]`
//! (seed, out, episodes, phi_points, f_values), `[[mixture]]` atoms for the
//! sensitivity run and `[region]` boxes for the region scan.

use std::path::{Path, PathBuf};

use quickdet::dominance::{ParameterBox, ScanConfig};
use quickdet::protocol::{ChangeModel, DetectionCosts, ObservationModel, ParameterMixture, Scenario};
use quickdet::solver::{BeliefGrid, ValueIterationConfig};
use quickdet::{DecisionFrame, PsychParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    pub utility: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureAtom {
    pub alpha: f64,
    pub lambda: f64,
    pub phi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeConfig {
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationConfig {
    pub post_change: Vec<f64>,
    pub pre_change: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub f: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { grid: 1000, tol: 1e-8, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub episodes: usize,
    pub phi_points: usize,
    pub f_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: None, out: None, episodes: 10_000, phi_points: 101, f_values: (1..=10).map(f64::from).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub reference: BoxConfig,
    pub test: BoxConfig,
    #[serde(default = "default_points_per_axis")]
    pub points_per_axis: usize,
    #[serde(default = "default_pi_samples")]
    pub pi_samples: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_points_per_axis() -> usize {
    5
}

fn default_pi_samples() -> usize {
    11
}

fn default_eps() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub frame: FrameConfig,
    pub agent: AgentConfig,
    #[serde(default)]
    pub mixture: Vec<MixtureAtom>,
    pub change: ChangeConfig,
    pub observation: ObservationConfig,
    pub costs: CostConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub experiment: RunConfig,
    pub region: Option<RegionConfig>,
}

/// The sections that determine solver artifacts, in a fixed order.
#[derive(Serialize)]
struct Hashed<'a> {
    frame: &'a FrameConfig,
    agent: &'a AgentConfig,
    change: &'a ChangeConfig,
    observation: &'a ObservationConfig,
    costs: &'a CostConfig,
    solver: &'a SolverConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.experiment.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.experiment.seed = Some(seed);
        }
        if let Some(grid) = o.grid {
            self.solver.grid = grid;
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
        }
    }

    /// SHA-256 of the frame, agent, change, observation, cost and solver
    /// sections, hex encoded.
    pub fn hash(&self) -> String {
        let hashed = Hashed {
            frame: &self.frame,
            agent: &self.agent,
            change: &self.change,
            observation: &self.observation,
            costs: &self.costs,
            solver: &self.solver,
        };
        let text = toml::to_string(&hashed).expect("config sections serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.experiment.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn frame(&self) -> CliResult<DecisionFrame> {
        DecisionFrame::new(self.frame.utility.clone()).map_err(config_err)
    }

    pub fn params(&self) -> CliResult<PsychParams> {
        let a = self.agent;
        PsychParams::new(a.alpha, a.lambda, a.phi).map_err(config_err)
    }

    pub fn scenario(&self) -> CliResult<Scenario> {
        Ok(Scenario {
            frame: self.frame()?,
            params: self.params()?,
            change: ChangeModel::new(self.change.p).map_err(config_err)?,
            obs: ObservationModel::new(self.observation.post_change.clone(), self.observation.pre_change.clone())
                .map_err(config_err)?,
            costs: DetectionCosts::new(self.costs.f, self.costs.d).map_err(config_err)?,
        })
    }

    pub fn grid(&self) -> CliResult<BeliefGrid> {
        BeliefGrid::new(self.solver.grid).map_err(config_err)
    }

    pub fn vi(&self) -> CliResult<ValueIterationConfig> {
        if !(self.solver.tol > 0.0) {
            return Err(CliError::Config(format!("solver tol must be > 0, got {}", self.solver.tol)));
        }
        Ok(ValueIterationConfig { tol: self.solver.tol, max_iter: self.solver.max_iter })
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.experiment
            .seed
            .ok_or_else(|| CliError::Config("a seed is required: pass --seed or set experiment.seed".into()))
    }

    pub fn mixture(&self) -> CliResult<ParameterMixture> {
        if self.mixture.is_empty() {
            return Err(CliError::Config("the sensitivity run needs at least one [[mixture]] atom".into()));
        }
        let atoms = self
            .mixture
            .iter()
            .map(|m| Ok((PsychParams::new(m.alpha, m.lambda, m.phi).map_err(config_err)?, m.weight)))
            .collect::<CliResult<Vec<_>>>()?;
        ParameterMixture::new(atoms).map_err(config_err)
    }

    pub fn region(&self) -> CliResult<(ParameterBox, ParameterBox, ScanConfig)> {
        let r = self.region.ok_or_else(|| CliError::Config("the region scan needs a [region] section".into()))?;
        let reference = ParameterBox::new(r.reference.lo, r.reference.hi).map_err(config_err)?;
        let test = ParameterBox::new(r.test.lo, r.test.hi).map_err(config_err)?;
        let cfg = ScanConfig {
            points_per_axis: r.points_per_axis,
            pi_samples: r.pi_samples,
            eps: r.eps,
            grid: self.grid()?,
            vi: self.vi()?,
            ..Default::default()
        };
        Ok((reference, test, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
[frame]
utility = [[20.0, 5.0], [25.0, 10.0]]

[agent]
alpha = 0.812
lambda = 10.495
phi = 0.9

[change]
p = 0.95

[observation]
post_change = [0.6, 0.25, 0.15]
pre_change = [0.15, 0.25, 0.6]

[costs]
f = 5.0
d = 1.0
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.experiment.f_values.len(), 10);
        assert!(c.scenario().is_ok());
        assert!(c.seed().is_err());
        assert!(c.mixture().is_err());
        assert!(c.region().is_err());
    }

    #[test]
    fn shipped_reference_config_is_complete() {
        let c = ExperimentConfig::from_toml(include_str!("../configs/reference.toml")).unwrap();
        assert!(c.scenario().is_ok());
        assert!(c.seed().is_ok());
        assert!(c.mixture().is_ok());
        assert!(c.region().is_ok());
    }

    #[test]
    fn hash_tracks_solver_inputs_only() {
        let a = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut b = a.clone();
        b.apply(&Overrides { seed: Some(3), out: Some("elsewhere".into()), ..Default::default() });
        assert_eq!(a.hash(), b.hash());
        b.apply(&Overrides { grid: Some(500), ..Default::default() });
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.costs.f = 4.0;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_values_and_unknown_keys() {
        let bad = SAMPLE.replace("alpha = 0.812", "alpha = 1.5");
        let c = ExperimentConfig::from_toml(&bad).unwrap();
        assert_eq!(c.params().unwrap_err().code(), 2);
        let typo = SAMPLE.replace("[costs]\nf", "[costs]\nfalse_alarm");
        assert_eq!(ExperimentConfig::from_toml(&typo).unwrap_err().code(), 2);
    }
}
