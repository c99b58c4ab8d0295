//! Parameter-space experiments: betweenness of interpolated parameters and
//! scans for Blackwell-ordered parameter boxes.

use std::io::Write;

use rayon::prelude::*;

use super::blackwell::{best_garbling, DominanceCertificate};
use crate::error::{Error, Result};
use crate::io::{write_table, Metadata};
use crate::protocol::{build_action_kernel_with, ChangeModel, DetectionCosts, ObservationModel};
use crate::quantum::steady_state;
use crate::solver::{value_iteration, BeliefGrid, ValueIterationConfig};
use crate::{BeliefVector, DecisionFrame, PsychParams, SteadyStateConfig};

/// `Gamma_bar_y^pi` for every observation `y`.
pub fn private_action_family(
    frame: &DecisionFrame,
    params: &PsychParams,
    change: &ChangeModel,
    obs: &ObservationModel,
    pi1: f64,
    ss: &SteadyStateConfig,
) -> Result<Vec<Vec<f64>>> {
    let pred = change.predict([pi1, 1.0 - pi1]);
    (0..obs.n_obs())
        .map(|y| {
            let eta = BeliefVector::new(crate::protocol::agent_belief(pred, y, obs).to_vec())?;
            Ok(steady_state(frame, params, &eta, ss)?.gamma.into_vec())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetweennessReport {
    pub checks: usize,
    pub violations: usize,
    /// `min (Gamma_3 - lo, hi - Gamma_3)` over all checks; negative values
    /// are excursions outside the interval.
    pub worst_margin: f64,
}

/// For `p3 = e p1 + (1 - e) p2`, checks that every `Gamma_{y,3}^pi(a)` lies
/// between `Gamma_{y,1}^pi(a)` and `Gamma_{y,2}^pi(a)` up to `tol`.
#[allow(clippy::too_many_arguments)]
pub fn interpolation_betweenness_check(
    frame: &DecisionFrame,
    p1: &PsychParams,
    p2: &PsychParams,
    change: &ChangeModel,
    obs: &ObservationModel,
    eps_values: &[f64],
    pi_values: &[f64],
    tol: f64,
) -> Result<BetweennessReport> {
    let ss = SteadyStateConfig::default();
    let mut report = BetweennessReport { checks: 0, violations: 0, worst_margin: f64::INFINITY };
    for &pi1 in pi_values {
        let g1 = private_action_family(frame, p1, change, obs, pi1, &ss)?;
        let g2 = private_action_family(frame, p2, change, obs, pi1, &ss)?;
        for &e in eps_values {
            let p3 = p1.interpolate(p2, e)?;
            let g3 = private_action_family(frame, &p3, change, obs, pi1, &ss)?;
            for y in 0..g3.len() {
                for a in 0..g3[y].len() {
                    let lo = g1[y][a].min(g2[y][a]);
                    let hi = g1[y][a].max(g2[y][a]);
                    let margin = (g3[y][a] - lo).min(hi - g3[y][a]);
                    report.checks += 1;
                    report.worst_margin = report.worst_margin.min(margin);
                    if margin < -tol {
                        report.violations += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Axis-aligned box in `(alpha, lambda, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl ParameterBox {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        for k in 0..3 {
            if !(lo[k] <= hi[k]) {
                return Err(Error::invalid(format!("box bounds out of order on axis {k}: {} > {}", lo[k], hi[k])));
            }
        }
        PsychParams::new(lo[0], lo[1], lo[2])?;
        PsychParams::new(hi[0], hi[1], hi[2])?;
        Ok(Self { lo, hi })
    }

    pub fn point(p: PsychParams) -> Self {
        let v = p.to_f64();
        Self { lo: v, hi: v }
    }

    /// Tensor grid with `per_axis` points on each non-degenerate axis.
    pub fn samples(&self, per_axis: usize) -> Vec<PsychParams> {
        let axis = |k: usize| -> Vec<f64> {
            if self.lo[k] == self.hi[k] || per_axis <= 1 {
                vec![self.lo[k]]
            } else {
                (0..per_axis)
                    .map(|j| self.lo[k] + (self.hi[k] - self.lo[k]) * j as f64 / (per_axis - 1) as f64)
                    .collect()
            }
        };
        let mut out = Vec::new();
        for &a in &axis(0) {
            for &l in &axis(1) {
                for &f in &axis(2) {
                    out.push(PsychParams::new(a, l, f).expect("inside a validated box"));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ReferenceDominates,
    TestDominates,
    Mutual,
    Neither,
    /// A steady-state or value-iteration failure for one of the two points.
    Unresolved,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::ReferenceDominates => "ref_dominates",
            Direction::TestDominates => "test_dominates",
            Direction::Mutual => "mutual",
            Direction::Neither => "none",
            Direction::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub reference: PsychParams,
    pub test: PsychParams,
    pub direction: Direction,
    /// Worst garbling residual of the certified direction, or of the better
    /// attempt when neither direction certifies.
    pub residual: f64,
    /// `min_pi (V_dominated - V_dominating)`; absent without a certificate.
    pub worst_v_margin: Option<f64>,
    /// Worst column-sum defect of `M^{-1}` over invertible certificates.
    pub inverse_column_defect: Option<f64>,
    pub inverse_row_defect: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    Dominating,
    Dominated,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterRegion {
    pub bounds: ParameterBox,
    pub tag: RegionTag,
    /// Indices into [`ScanReport::pairs`] of certified pairs with a
    /// nonnegative value margin.
    pub witnesses: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub pairs: Vec<PairResult>,
    pub reference: ParameterRegion,
    pub test: ParameterRegion,
}

impl ScanReport {
    /// Certified pairs whose value margin is at least `-tol`.
    pub fn certified_pairs(&self, direction: Direction, tol: f64) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.direction == direction && p.worst_v_margin.is_some_and(|m| m >= -tol))
            .count()
    }

    pub fn write_csv<W: Write>(&self, out: W, meta: &Metadata) -> Result<()> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let rows = self.pairs.iter().map(|p| {
            let r = p.reference.to_f64();
            let t = p.test.to_f64();
            vec![
                r[0].to_string(),
                r[1].to_string(),
                r[2].to_string(),
                t[0].to_string(),
                t[1].to_string(),
                t[2].to_string(),
                p.direction.label().to_string(),
                p.residual.to_string(),
                opt(p.worst_v_margin),
                opt(p.inverse_column_defect),
            ]
        });
        write_table(
            out,
            meta,
            &[
                "alpha_ref",
                "lambda_ref",
                "phi_ref",
                "alpha_test",
                "lambda_test",
                "phi_test",
                "direction",
                "residual",
                "worst_V_margin",
                "inverse_col_defect",
            ],
            rows,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub points_per_axis: usize,
    pub pi_samples: usize,
    /// Garbling residual accepted as a certificate.
    pub eps: f64,
    /// Slack allowed on the value ordering.
    pub margin_tol: f64,
    pub grid: BeliefGrid,
    pub vi: ValueIterationConfig,
    pub ss: SteadyStateConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            points_per_axis: 5,
            pi_samples: 11,
            eps: 1e-6,
            margin_tol: 1e-6,
            grid: BeliefGrid::default(),
            vi: ValueIterationConfig::default(),
            ss: SteadyStateConfig::default(),
        }
    }
}

struct PointData {
    values: Vec<f64>,
    // families[k][y][a] at the k-th sampled belief
    families: Vec<Vec<Vec<f64>>>,
}

fn point_data(
    frame: &DecisionFrame,
    params: &PsychParams,
    change: &ChangeModel,
    obs: &ObservationModel,
    costs: &DetectionCosts,
    pi_index: &[usize],
    config: &ScanConfig,
) -> Result<PointData> {
    let kernel = build_action_kernel_with(frame, params, change, obs, config.grid, &config.ss)?;
    let (v, _) = value_iteration(&kernel, change, costs, &config.vi)?;
    let families = pi_index
        .iter()
        .map(|&i| {
            (0..kernel.n_obs())
                .map(|y| kernel.private_distribution(i, y).expect("freshly built kernel").to_vec())
                .collect()
        })
        .collect();
    Ok(PointData { values: v.values().to_vec(), families })
}

/// Certificates at every sampled belief, or the worst residual seen.
fn certify(hat: &PointData, garbled: &PointData, eps: f64) -> Result<(bool, f64, Vec<DominanceCertificate>)> {
    let mut certs = Vec::with_capacity(hat.families.len());
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (gh, g) in hat.families.iter().zip(&garbled.families) {
        let cert = best_garbling(gh, g)?;
        worst = worst.max(cert.residual);
        ok &= cert.residual <= eps && cert.is_stochastic();
        certs.push(cert);
    }
    Ok((ok, worst, certs))
}

fn min_gap(upper: &[f64], lower: &[f64]) -> f64 {
    upper.iter().zip(lower).map(|(u, l)| u - l).fold(f64::INFINITY, f64::min)
}

fn compare(
    reference: &PsychParams,
    test: &PsychParams,
    ref_data: &PointData,
    test_data: &PointData,
    config: &ScanConfig,
) -> Result<PairResult> {
    let (ref_dom, ref_res, ref_certs) = certify(ref_data, test_data, config.eps)?;
    let (test_dom, test_res, _) = certify(test_data, ref_data, config.eps)?;
    let ref_margin = min_gap(&test_data.values, &ref_data.values);
    let test_margin = min_gap(&ref_data.values, &test_data.values);
    let (direction, residual, margin) = match (ref_dom, test_dom) {
        (true, true) => (Direction::Mutual, ref_res.max(test_res), Some(ref_margin.min(test_margin))),
        (true, false) => (Direction::ReferenceDominates, ref_res, Some(ref_margin)),
        (false, true) => (Direction::TestDominates, test_res, Some(test_margin)),
        (false, false) => (Direction::Neither, ref_res.min(test_res), None),
    };
    let (mut inv_col, mut inv_row) = (None, None);
    if ref_dom {
        for c in &ref_certs {
            if let Some((_, rows, cols)) = c.inverse_defects() {
                inv_col = Some(inv_col.map_or(cols, |v: f64| v.max(cols)));
                inv_row = Some(inv_row.map_or(rows, |v: f64| v.max(rows)));
            }
        }
    }
    Ok(PairResult {
        reference: *reference,
        test: *test,
        direction,
        residual,
        worst_v_margin: margin,
        inverse_column_defect: inv_col,
        inverse_row_defect: inv_row,
        note: None,
    })
}

/// Compares every sampled reference point against every sampled test
/// point: garbling certificates in both directions at the sampled beliefs,
/// then the ordering of the two optimal value functions.
#[allow(clippy::too_many_arguments)]
pub fn region_scan(
    frame: &DecisionFrame,
    reference_box: &ParameterBox,
    test_box: &ParameterBox,
    change: &ChangeModel,
    obs: &ObservationModel,
    costs: &DetectionCosts,
    config: &ScanConfig,
) -> Result<ScanReport> {
    if config.pi_samples < 1 {
        return Err(Error::invalid("need at least one belief sample"));
    }
    let grid = config.grid;
    let pi_index: Vec<usize> = if config.pi_samples == 1 {
        vec![grid.nearest(0.5)]
    } else {
        (0..config.pi_samples).map(|k| grid.nearest(k as f64 / (config.pi_samples - 1) as f64)).collect()
    };
    let refs = reference_box.samples(config.points_per_axis);
    let tests = test_box.samples(config.points_per_axis);
    let compute = |ps: &[PsychParams]| -> Vec<std::result::Result<PointData, String>> {
        ps.par_iter()
            .map(|p| point_data(frame, p, change, obs, costs, &pi_index, config).map_err(|e| e.to_string()))
            .collect()
    };
    let ref_data = compute(&refs);
    let test_data = compute(&tests);

    let index: Vec<(usize, usize)> = (0..refs.len()).flat_map(|r| (0..tests.len()).map(move |t| (r, t))).collect();
    let pairs = index
        .par_iter()
        .map(|&(r, t)| {
            let unresolved = |note: String| PairResult {
                reference: refs[r],
                test: tests[t],
                direction: Direction::Unresolved,
                residual: f64::NAN,
                worst_v_margin: None,
                inverse_column_defect: None,
                inverse_row_defect: None,
                note: Some(note),
            };
            match (&ref_data[r], &test_data[t]) {
                (Ok(rd), Ok(td)) => {
                    compare(&refs[r], &tests[t], rd, td, config).unwrap_or_else(|e| unresolved(e.to_string()))
                }
                (Err(e), _) | (_, Err(e)) => unresolved(e.clone()),
            }
        })
        .collect::<Vec<_>>();

    let good = |p: &PairResult, d: Direction| {
        (p.direction == d || p.direction == Direction::Mutual) && p.worst_v_margin.is_some_and(|m| m >= -config.margin_tol)
    };
    let witnesses = |d: Direction| -> Vec<usize> { (0..pairs.len()).filter(|&k| good(&pairs[k], d)).collect() };
    let ref_wit = witnesses(Direction::ReferenceDominates);
    let test_wit = witnesses(Direction::TestDominates);
    let (ref_tag, test_tag) = if ref_wit.len() == pairs.len() {
        (RegionTag::Dominating, RegionTag::Dominated)
    } else if test_wit.len() == pairs.len() {
        (RegionTag::Dominated, RegionTag::Dominating)
    } else {
        (RegionTag::Unresolved, RegionTag::Unresolved)
    };
    Ok(ScanReport {
        reference: ParameterRegion { bounds: *reference_box, tag: ref_tag, witnesses: ref_wit },
        test: ParameterRegion { bounds: *test_box, tag: test_tag, witnesses: test_wit },
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> DecisionFrame {
        DecisionFrame::prisoners_dilemma(20.0, 5.0, 10.0, 25.0).unwrap()
    }

    fn setting() -> (ChangeModel, ObservationModel, DetectionCosts) {
        (
            ChangeModel::new(0.95).unwrap(),
            ObservationModel::new(vec![0.6, 0.25, 0.15], vec![0.15, 0.25, 0.6]).unwrap(),
            DetectionCosts::new(5.0, 1.0).unwrap(),
        )
    }

    #[test]
    fn box_sampling() {
        let b = ParameterBox::new([0.1, 10.0, 0.1], [0.5, 10.0, 0.5]).unwrap();
        let s = b.samples(3);
        assert_eq!(s.len(), 9);
        assert_eq!(s[0].to_f64(), [0.1, 10.0, 0.1]);
        assert_eq!(s[8].to_f64(), [0.5, 10.0, 0.5]);
        assert!(ParameterBox::new([0.5, 0.0, 0.0], [0.1, 1.0, 1.0]).is_err());
        assert!(ParameterBox::new([0.5, 0.0, 0.0], [1.1, 1.0, 1.0]).is_err());
    }

    #[test]
    fn equal_parameters_are_trivially_between() {
        let (change, obs, _) = setting();
        let p = PsychParams::new(0.3, 20.0, 0.3).unwrap();
        let r = interpolation_betweenness_check(&pd(), &p, &p, &change, &obs, &[0.5], &[0.2, 0.8], 1e-6).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.worst_margin.abs() < 1e-9);
    }

    #[test]
    fn self_scan_is_mutual_with_zero_margin() {
        let (change, obs, costs) = setting();
        let b = ParameterBox::point(PsychParams::new(0.6, 20.0, 0.3).unwrap());
        let cfg = ScanConfig { grid: BeliefGrid::new(50).unwrap(), pi_samples: 3, ..Default::default() };
        let report = region_scan(&pd(), &b, &b, &change, &obs, &costs, &cfg).unwrap();
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].direction, Direction::Mutual);
        assert_eq!(report.pairs[0].worst_v_margin, Some(0.0));
        assert_eq!(report.reference.tag, RegionTag::Dominating);
    }
}
