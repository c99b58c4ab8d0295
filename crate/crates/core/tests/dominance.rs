use nalgebra::DMatrix;
use proptest::prelude::*;
use quickdet::dominance::{
    best_garbling, convex_mixture_matrix, find_dominance_matrix, kl_divergence, model_distance,
    private_action_family, region_scan, sensitivity_bound_check, Direction, ParameterBox, ScanConfig,
};
use quickdet::protocol::{
    build_action_kernel, build_mismatched_kernel, ChangeModel, DetectionCosts, ObservationModel, ParameterMixture,
    Scenario,
};
use quickdet::solver::{BeliefGrid, ValueIterationConfig};
use quickdet::{DecisionFrame, PsychParams, SteadyStateConfig};

fn pd() -> DecisionFrame {
    DecisionFrame::prisoners_dilemma(20.0, 5.0, 10.0, 25.0).unwrap()
}

fn obs() -> ObservationModel {
    ObservationModel::new(vec![0.6, 0.25, 0.15], vec![0.15, 0.25, 0.6]).unwrap()
}

fn change() -> ChangeModel {
    ChangeModel::new(0.95).unwrap()
}

fn family(alpha: f64, lambda: f64, phi: f64, pi1: f64) -> Vec<Vec<f64>> {
    let params = PsychParams::new(alpha, lambda, phi).unwrap();
    private_action_family(&pd(), &params, &change(), &obs(), pi1, &SteadyStateConfig::default()).unwrap()
}

/// Smallest worst-case residual over `M = [[m1, 1-m1], [m2, 1-m2]]` on a
/// lattice of spacing `h`. With two actions the residuals of both columns
/// have equal magnitude, so only the first column is scanned.
fn lattice_residual(gh: &[Vec<f64>], g: &[Vec<f64>], h: f64) -> f64 {
    let steps = (1.0 / h).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let m1 = i as f64 * h;
        for j in 0..=steps {
            let m2 = j as f64 * h;
            let mut worst: f64 = 0.0;
            for (a, b) in gh.iter().zip(g) {
                worst = worst.max((b[0] - a[0] * m1 - a[1] * m2).abs());
            }
            best = best.min(worst);
        }
    }
    best
}

#[test]
fn garbling_lp_agrees_with_exhaustive_scan() {
    let h = 1e-4;
    let strong = family(0.9, 50.0, 0.3, 0.5);
    let weak = family(0.2, 50.0, 0.3, 0.5);
    let other = family(0.2, 10.0, 0.9, 0.5);
    // the PD families barely move with y, so add a pair that is clearly not
    // a garbling
    let flat = vec![vec![0.5, 0.5]; 3];
    let sharp = vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.1, 0.9]];
    let (mut feasible, mut infeasible) = (0, 0);
    for (gh, g) in [(&strong, &weak), (&weak, &strong), (&strong, &other), (&other, &strong), (&flat, &sharp), (&sharp, &flat)] {
        let lp = best_garbling(gh, g).unwrap();
        let scan = lattice_residual(gh, g, h);
        // the optimum is never worse than a lattice point, and the nearest
        // lattice point to the optimum is at most h/2 away in each entry
        assert!(lp.residual <= scan + 1e-12, "{} vs {scan}", lp.residual);
        assert!(scan <= lp.residual + h / 2.0, "{} vs {scan}", lp.residual);
        for eps in [1e-6, 1e-5, 1e-3, 1e-2] {
            let lp_feasible = find_dominance_matrix(gh, g, eps).unwrap().is_some();
            if scan <= eps {
                assert!(lp_feasible, "eps {eps}: scan {scan} lp {}", lp.residual);
                feasible += 1;
            } else if scan - h / 2.0 > eps {
                assert!(!lp_feasible, "eps {eps}: scan {scan} lp {}", lp.residual);
                infeasible += 1;
            }
        }
    }
    assert!(feasible > 0 && infeasible > 0, "{feasible} {infeasible}");
}

#[test]
fn mixture_identity_on_certificates() {
    let gh = family(0.9, 50.0, 0.3, 0.5);
    let m1 = best_garbling(&gh, &family(0.6, 50.0, 0.3, 0.5)).unwrap().m;
    let m2 = best_garbling(&gh, &family(0.3, 50.0, 0.3, 0.5)).unwrap().m;
    let m3 = convex_mixture_matrix(&m1, &m2, &[0.5, 0.5]).unwrap();
    for row in &gh {
        for a in 0..2 {
            let via = |m: &DMatrix<f64>| row[0] * m[(0, a)] + row[1] * m[(1, a)];
            assert!((via(&m3.m) - 0.5 * via(&m1) - 0.5 * via(&m2)).abs() < 1e-12);
        }
    }
    assert!(m3.row_sum_defect < 1e-9);
}

fn stochastic(raw: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::from_row_slice(n, n, &raw[..n * n]);
    for i in 0..n {
        let s = m.row(i).sum();
        for a in 0..n {
            m[(i, a)] /= s;
        }
    }
    m
}

fn distributions(raw: &[f64], rows: usize, n: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|r| {
            let row = &raw[r * n..(r + 1) * n];
            let s: f64 = row.iter().sum();
            row.iter().map(|v| v / s).collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mixture_identity_holds_for_any_inputs(
        gh_raw in prop::collection::vec(0.01f64..1.0, 9),
        m1_raw in prop::collection::vec(0.01f64..1.0, 9),
        m2_raw in prop::collection::vec(0.01f64..1.0, 9),
        w in prop::collection::vec(0.0f64..=1.0, 3),
    ) {
        let gh = distributions(&gh_raw, 3, 3);
        let (m1, m2) = (stochastic(&m1_raw, 3), stochastic(&m2_raw, 3));
        let m3 = convex_mixture_matrix(&m1, &m2, &w).unwrap();
        for row in &gh {
            for a in 0..3 {
                let via = |m: &DMatrix<f64>| (0..3).map(|i| row[i] * m[(i, a)]).sum::<f64>();
                prop_assert!((via(&m3.m) - (w[a] * via(&m1) + (1.0 - w[a]) * via(&m2))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn certificates_survive_an_independent_check(
        gh_raw in prop::collection::vec(0.01f64..1.0, 9),
        m_raw in prop::collection::vec(0.01f64..1.0, 9),
        g_raw in prop::collection::vec(0.01f64..1.0, 9),
        planted in any::<bool>(),
    ) {
        let gh = distributions(&gh_raw, 3, 3);
        let g = if planted {
            let m = stochastic(&m_raw, 3);
            gh.iter().map(|r| (0..3).map(|a| (0..3).map(|i| r[i] * m[(i, a)]).sum()).collect()).collect()
        } else {
            distributions(&g_raw, 3, 3)
        };
        let found = find_dominance_matrix(&gh, &g, 1e-6).unwrap();
        if planted {
            prop_assert!(found.is_some());
        }
        if let Some(cert) = found {
            let m = &cert.m;
            for i in 0..3 {
                prop_assert!((m.row(i).sum() - 1.0).abs() <= 1e-9);
                for a in 0..3 {
                    prop_assert!(m[(i, a)] >= -1e-9);
                }
            }
            for (r, target) in gh.iter().zip(&g) {
                for a in 0..3 {
                    let mixed: f64 = (0..3).map(|i| r[i] * m[(i, a)]).sum();
                    prop_assert!((mixed - target[a]).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn kl_is_nonnegative(p_raw in prop::collection::vec(0.0f64..1.0, 3), q_raw in prop::collection::vec(0.01f64..1.0, 3)) {
        prop_assume!(p_raw.iter().sum::<f64>() > 0.0);
        let p = &distributions(&p_raw, 1, 3)[0];
        let q = &distributions(&q_raw, 1, 3)[0];
        prop_assert!(kl_divergence(p, q) >= 0.0);
    }
}

#[test]
fn model_distance_matches_double_loop() {
    let grid = BeliefGrid::new(50).unwrap();
    let truth = PsychParams::new(0.812, 10.495, 0.9).unwrap();
    let mixture = ParameterMixture::new(vec![(truth, 0.8), (PsychParams::new(0.7, 10.495, 0.9).unwrap(), 0.2)]).unwrap();
    let k = build_action_kernel(&pd(), &truth, &change(), &obs(), grid).unwrap();
    let kh = build_mismatched_kernel(&pd(), &mixture, &change(), &obs(), grid).unwrap();
    let p = [[1.0, 0.0], [0.05, 0.95]];
    let mut sup: f64 = 0.0;
    for g in 0..grid.len() {
        for row in &p {
            let mut s = 0.0;
            for (j, pij) in row.iter().enumerate() {
                let (r, rh) = (k.row(g, j), kh.row(g, j));
                let d: f64 = (0..2).filter(|&a| r[a] > 0.0).map(|a| r[a] * (r[a] / rh[a]).ln()).sum();
                s += pij * d.max(0.0).sqrt();
            }
            sup = sup.max(s);
        }
    }
    let expect = 2f64.sqrt() * sup;
    let got = model_distance(&k, &kh, &change()).unwrap();
    assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    assert!(got > 0.0);
    let back = model_distance(&kh, &k, &change()).unwrap();
    assert!(back != got, "KL asymmetry should show: {got} {back}");
    assert_eq!(model_distance(&k, &k, &change()).unwrap(), 0.0);
}

fn scenario(f: f64) -> Scenario {
    Scenario {
        frame: pd(),
        params: PsychParams::new(0.812, 10.495, 0.9).unwrap(),
        change: change(),
        obs: obs(),
        costs: DetectionCosts::new(f, 1.0).unwrap(),
    }
}

#[test]
fn sensitivity_trivial_cases() {
    let grid = BeliefGrid::new(200).unwrap();
    let vi = ValueIterationConfig::default();
    let ss = SteadyStateConfig::default();
    let s = scenario(5.0);
    let exact = sensitivity_bound_check(&s, &ParameterMixture::point(s.params), grid, &vi, &ss).unwrap();
    assert_eq!(exact.distance, 0.0);
    assert_eq!(exact.lhs, exact.optimal);
    assert!(exact.worst_slack() >= 0.0);
    assert_eq!(exact.k, 5.0 / 0.95);

    let free = scenario(0.0);
    let other = ParameterMixture::point(PsychParams::new(0.5, 30.0, 0.2).unwrap());
    let r = sensitivity_bound_check(&free, &other, grid, &vi, &ss).unwrap();
    assert!(r.lhs.iter().all(|&v| v == 0.0));
    assert!(r.optimal.iter().all(|&v| v == 0.0));
}

#[test]
fn sensitivity_bound_holds_for_alpha_shifts() {
    let grid = BeliefGrid::new(200).unwrap();
    let s = scenario(5.0);
    for alpha in [0.712, 0.912] {
        let m = ParameterMixture::point(PsychParams::new(alpha, 10.495, 0.9).unwrap());
        let r = sensitivity_bound_check(&s, &m, grid, &ValueIterationConfig::default(), &SteadyStateConfig::default())
            .unwrap();
        assert_eq!(r.violations(0.0), 0, "alpha {alpha}");
    }
}

#[test]
fn identical_boxes_are_mutual_with_zero_margin() {
    let p = PsychParams::new(0.6, 30.0, 0.3).unwrap();
    let cfg = ScanConfig { grid: BeliefGrid::new(100).unwrap(), pi_samples: 5, ..Default::default() };
    let costs = DetectionCosts::new(5.0, 1.0).unwrap();
    let b = ParameterBox::point(p);
    let report = region_scan(&pd(), &b, &b, &change(), &obs(), &costs, &cfg).unwrap();
    assert_eq!(report.pairs.len(), 1);
    assert_eq!(report.pairs[0].direction, Direction::Mutual);
    assert_eq!(report.pairs[0].worst_v_margin, Some(0.0));
}

#[test]
fn value_ordering_follows_certificates_on_a_small_scan() {
    let cfg = ScanConfig { grid: BeliefGrid::new(100).unwrap(), points_per_axis: 2, pi_samples: 6, ..Default::default() };
    let costs = DetectionCosts::new(5.0, 1.0).unwrap();
    let hi = ParameterBox::new([0.8, 10.0, 0.1], [1.0, 100.0, 0.5]).unwrap();
    let lo = ParameterBox::new([0.1, 10.0, 0.1], [0.5, 100.0, 0.5]).unwrap();
    let report = region_scan(&pd(), &hi, &lo, &change(), &obs(), &costs, &cfg).unwrap();
    for pair in &report.pairs {
        if let Some(m) = pair.worst_v_margin {
            assert!(m >= -1e-6, "{pair:?}");
        }
    }
}
