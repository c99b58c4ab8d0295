//! One function per subcommand. Each returns the lines to print on stdout.

use std::path::Path;

use quickdet::dominance::{region_scan, sensitivity_bound_check};
use quickdet::io::{write_table, Metadata};
use quickdet::protocol::{build_action_kernel_with, run_episodes, CostEstimate};
use quickdet::quantum::{sure_thing_sweep, unit_sweep};
use quickdet::solver::{classical_value_iteration, value_iteration, Policy};
use quickdet::SteadyStateConfig;

use crate::cache::{write_atomic, Cache};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

fn fmt_threshold(p: &Policy) -> String {
    p.threshold().map(|t| t.to_string()).unwrap_or_else(|| "none".into())
}

fn base_meta(cfg: &ExperimentConfig) -> Metadata {
    let mut meta = Metadata::new();
    meta.insert("config_hash".into(), cfg.hash());
    meta
}

fn write_output(path: &Path, meta: &Metadata, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    write_atomic(path, |w| Ok(write_table(w, meta, header, rows)?))
}

pub fn stp_sweep(cfg: &ExperimentConfig, points: Option<usize>) -> CliResult<Vec<String>> {
    let frame = cfg.frame()?;
    let phis = unit_sweep(points.unwrap_or(cfg.experiment.phi_points));
    let a = cfg.agent;
    let sweep = sure_thing_sweep(&frame, a.alpha, a.lambda, &phis, &SteadyStateConfig::default())?;
    let onset = sweep.onset();
    let mut meta = base_meta(cfg);
    meta.insert("alpha".into(), a.alpha.to_string());
    meta.insert("lambda".into(), a.lambda.to_string());
    meta.insert("onset".into(), onset.map(|v| v.to_string()).unwrap_or_else(|| "none".into()));
    let rows = sweep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.phi.to_string(),
                r.defect_if_defect.to_string(),
                r.defect_if_cooperate.to_string(),
                r.defect_if_unknown.to_string(),
                r.full_if_defect.to_string(),
                r.full_if_cooperate.to_string(),
                u8::from(r.violation).to_string(),
            ]
        })
        .collect();
    let path = cfg.out_dir().join("stp_sweep.csv");
    write_output(
        &path,
        &meta,
        &["phi", "p_defect_if_defect", "p_defect_if_cooperate", "p_defect_unknown", "p_full_if_defect", "p_full_if_cooperate", "violation"],
        rows,
    )?;
    let flagged = sweep.rows.iter().filter(|r| r.violation).count();
    Ok(vec![
        format!("rows={} violations={flagged}", sweep.rows.len()),
        format!("onset={}", meta["onset"]),
        format!("wrote {}", path.display()),
    ])
}

pub fn solve(cfg: &ExperimentConfig) -> CliResult<Vec<String>> {
    let s = cfg.scenario()?;
    let grid = cfg.grid()?;
    let kernel = build_action_kernel_with(&s.frame, &s.params, &s.change, &s.obs, grid, &SteadyStateConfig::default())?;
    let (value, policy) = value_iteration(&kernel, &s.change, &s.costs, &cfg.vi()?)?;
    let cache = Cache::new(&cfg.out_dir(), &cfg.hash());
    cache.store(&kernel, &value, &policy)?;
    Ok(vec![
        format!("config_hash={}", cfg.hash()),
        format!("threshold={}", fmt_threshold(&policy)),
        format!("crossings={}", policy.report().crossings),
        format!("iterations={}", value.iterations()),
        format!("value_at_start={}", value.values()[0]),
        format!("wrote {}", cache.dir().display()),
    ])
}

pub fn threshold_sweep(cfg: &ExperimentConfig) -> CliResult<Vec<String>> {
    let s = cfg.scenario()?;
    let grid = cfg.grid()?;
    let vi = cfg.vi()?;
    // the kernel does not depend on the costs
    let kernel = build_action_kernel_with(&s.frame, &s.params, &s.change, &s.obs, grid, &SteadyStateConfig::default())?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &f in &cfg.experiment.f_values {
        let costs = quickdet::protocol::DetectionCosts::new(f, s.costs.d)?;
        let (_, quantum) = value_iteration(&kernel, &s.change, &costs, &vi)?;
        let (_, classical) = classical_value_iteration(&s.change, &s.obs, &costs, grid, &vi)?;
        let (q, c) = (fmt_threshold(&quantum), fmt_threshold(&classical));
        lines.push(format!("f={f} quantum={q} classical={c}"));
        rows.push(vec![f.to_string(), q, c]);
    }
    let path = cfg.out_dir().join("threshold_sweep.csv");
    write_output(&path, &base_meta(cfg), &["f", "thr_quantum", "thr_classical"], rows)?;
    lines.push(format!("wrote {}", path.display()));
    Ok(lines)
}

pub fn simulate(cfg: &ExperimentConfig, episodes: Option<usize>) -> CliResult<Vec<String>> {
    let seed = cfg.seed()?;
    let s = cfg.scenario()?;
    let cache = Cache::new(&cfg.out_dir(), &cfg.hash());
    let policy = cache.load_policy()?;
    let kernel = cache.load_kernel()?;
    let n = episodes.unwrap_or(cfg.experiment.episodes);
    let traces = run_episodes(&s, &kernel, &policy, seed, n)?;
    let est = CostEstimate::from_traces(&traces)?;
    let delay = est.mean_delay_given_detection.map(|d| d.to_string()).unwrap_or_else(|| "none".into());
    let mut meta = base_meta(cfg);
    meta.insert("seed".into(), seed.to_string());
    meta.insert("episodes".into(), n.to_string());
    meta.insert("mean_cost".into(), est.mean.to_string());
    meta.insert("std_error".into(), est.std_error.to_string());
    meta.insert("false_alarm_rate".into(), est.false_alarm_rate.to_string());
    meta.insert("mean_delay_given_detection".into(), delay.clone());
    let rows = traces
        .iter()
        .enumerate()
        .map(|(k, t)| {
            vec![
                k.to_string(),
                t.change_time.to_string(),
                t.stop_time.to_string(),
                t.delay().to_string(),
                u8::from(t.false_alarm()).to_string(),
                t.cost.to_string(),
            ]
        })
        .collect();
    let path = cfg.out_dir().join("simulate.csv");
    write_output(&path, &meta, &["episode", "tau0", "tau", "delay", "false_alarm", "cost"], rows)?;
    Ok(vec![
        format!("episodes={n} seed={seed}"),
        format!("mean_cost={} std_error={}", est.mean, est.std_error),
        format!("false_alarm_rate={}", est.false_alarm_rate),
        format!("mean_delay_given_detection={delay}"),
        format!("wrote {}", path.display()),
    ])
}

pub fn sensitivity(cfg: &ExperimentConfig) -> CliResult<Vec<String>> {
    let s = cfg.scenario()?;
    let mixture = cfg.mixture()?;
    let grid = cfg.grid()?;
    let r = sensitivity_bound_check(&s, &mixture, grid, &cfg.vi()?, &SteadyStateConfig::default())?;
    let mut meta = base_meta(cfg);
    meta.insert("K".into(), r.k.to_string());
    meta.insert("distance".into(), r.distance.to_string());
    let rows = (0..grid.len())
        .map(|i| {
            vec![
                grid.point(i).to_string(),
                r.lhs[i].to_string(),
                r.rhs[i].to_string(),
                (r.rhs[i] - r.lhs[i]).to_string(),
                r.optimal[i].to_string(),
            ]
        })
        .collect();
    let path = cfg.out_dir().join("sensitivity.csv");
    write_output(&path, &meta, &["pi1", "lhs", "rhs", "slack", "optimal"], rows)?;
    Ok(vec![
        format!("K={} distance={}", r.k, r.distance),
        format!("worst_slack={} violations={}", r.worst_slack(), r.violations(0.0)),
        format!("wrote {}", path.display()),
    ])
}

pub fn region(cfg: &ExperimentConfig) -> CliResult<Vec<String>> {
    let s = cfg.scenario()?;
    let (reference, test, scan) = cfg.region()?;
    let report = region_scan(&s.frame, &reference, &test, &s.change, &s.obs, &s.costs, &scan)?;
    let path = cfg.out_dir().join("region_scan.csv");
    write_atomic(&path, |w| Ok(report.write_csv(w, &base_meta(cfg))?))?;
    let mut counts = std::collections::BTreeMap::new();
    for p in &report.pairs {
        *counts.entry(p.direction.label()).or_insert(0usize) += 1;
    }
    let mut lines = vec![format!("pairs={}", report.pairs.len())];
    lines.extend(counts.iter().map(|(k, v)| format!("{k}={v}")));
    let worst = report.pairs.iter().filter_map(|p| p.worst_v_margin).fold(f64::INFINITY, f64::min);
    if worst.is_finite() {
        lines.push(format!("worst_V_margin={worst}"));
    }
    lines.push(format!("wrote {}", path.display()));
    Ok(lines)
}
