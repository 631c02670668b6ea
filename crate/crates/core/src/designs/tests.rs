use super::*;
use crate::channel::build_channel_set;
use crate::oracle;
use crate::presets;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_multi(sinr_db: Option<f64>) -> ScenarioConfig {
    presets::multi_target(3, 3, 0.3, sinr_db)
}

#[test]
fn quad_coeffs_match_explicit_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = oracle::random_complex(&mut rng, 4, 1).column(0).into_owned();
    let q = quad_coeffs(&x);
    for (i, b) in hermitian_basis(4).iter().enumerate() {
        assert!((q[i] - quad(b, &x)).abs() < 1e-12);
    }
}

#[test]
fn subspace_dimensions() {
    let cfg = presets::multi_target(4, 4, 0.3, None);
    let mut one = cfg.clone();
    one.targets.truncate(1);
    one.users.truncate(1);
    let ch = build_channel_set(&one).unwrap();
    assert_eq!(build_subspace(&ch, SubspaceKind::SensingCommCrb).unwrap().dim(), 5);
    let ch = build_channel_set(&cfg).unwrap();
    let sb = build_subspace(&ch, SubspaceKind::SensingCommPower).unwrap();
    assert_eq!(sb.dim(), 4);
    let qhq = sb.q_orth.adjoint() * &sb.q_orth;
    assert!((qhq - CMatrix::identity(4, 4)).norm() < 1e-10);
}

#[test]
fn subspace_projector_matches_pseudo_inverse() {
    let cfg = presets::multi_target(4, 4, 0.3, None);
    let ch = build_channel_set(&cfg).unwrap();
    let sb = build_subspace(&ch, SubspaceKind::SensingCommCrb).unwrap();
    let raw = crate::fisher::hstack(&subspace::generating_blocks(&ch, SubspaceKind::SensingCommCrb).iter().collect::<Vec<_>>());
    let diff = linalg::projector(&sb.q_orth) - linalg::pinv_projector(&raw, 1e-12);
    assert!(linalg::frobenius(&diff) <= 1e-8);
    let upper = sb.r_factor.clone();
    for i in 0..upper.nrows() {
        for j in 0..i {
            assert!(upper[(i, j)].norm() < 1e-10);
        }
    }
}

#[test]
fn probe_single_user_bound() {
    let mut cfg = presets::bistatic_collocated(28e9, 4, 0.05, 0.2);
    let ch = build_channel_set(&cfg).unwrap();
    let gamma_c = single_user_max_sinr(&ch, &cfg, 0);
    let want = cfg.total_power * ch.h(0).norm_squared() / cfg.comm_noise_power;
    assert!((gamma_c - want).abs() <= 1e-12 * want);

    cfg.users[0].sinr_threshold = 0.5 * gamma_c;
    let r = feasibility_probe(&ch, &cfg, &SolverSettings::default()).unwrap();
    assert!(r.feasible);
    assert!((r.min_power_w - 0.5 * cfg.total_power).abs() <= 1e-6 * cfg.total_power);

    cfg.users[0].sinr_threshold = gamma_c * (1.0 + 1e-3);
    let r = feasibility_probe(&ch, &cfg, &SolverSettings::default()).unwrap();
    assert!(!r.feasible);
    assert!(r.to_string().contains("max achievable"));

    cfg.users[0].sinr_threshold = 0.0;
    assert!(feasibility_probe(&ch, &cfg, &SolverSettings::default()).unwrap().feasible);
}

#[test]
fn probe_two_users() {
    let cfg = small_multi(Some(-10.0));
    let ch = build_channel_set(&cfg).unwrap();
    let r = feasibility_probe(&ch, &cfg, &SolverSettings::default()).unwrap();
    assert!(r.feasible && r.min_power_w > 0.0 && r.min_power_w < cfg.total_power);
    // Both users sit on the array axis, so strong requirements need far more than the budget.
    let cfg = small_multi(Some(10.0));
    let r = feasibility_probe(&ch, &cfg, &SolverSettings::default()).unwrap();
    assert!(!r.feasible && r.min_power_w > cfg.total_power);
}

#[test]
fn max_uniform_sinr_brackets_feasibility() {
    let settings = SolverSettings::default();
    let cfg = presets::bistatic_collocated(28e9, 4, 0.05, 0.2);
    let ch = build_channel_set(&cfg).unwrap();
    let top = max_uniform_sinr(&ch, &cfg, &settings).unwrap();
    let bound = single_user_max_sinr(&ch, &cfg, 0);
    assert!((top - bound).abs() <= 1e-6 * bound);

    let cfg = small_multi(None);
    let ch = build_channel_set(&cfg).unwrap();
    let top = max_uniform_sinr(&ch, &cfg, &settings).unwrap();
    let probe = |g: f64| feasibility_probe(&ch, &cfg.clone().with_uniform_sinr(g), &settings).unwrap().feasible;
    assert!(probe(top));
    assert!(!probe(top * 1.01));
}

#[test]
fn maxmin_single_target_no_users_is_matched_filter() {
    let mut cfg = presets::bistatic_collocated(28e9, 4, 0.05, 0.2);
    cfg.users.clear();
    let ch = build_channel_set(&cfg).unwrap();
    let sol = solve_maxmin_illumination(&ch, &cfg, &DesignOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let v = ch.v.column(0).conjugate();
    let mu = cfg.total_power * v.norm_squared();
    assert!((sol.objective_value - mu).abs() <= 1e-6 * mu, "{} vs {mu}", sol.objective_value);
    let want = &v * v.adjoint() * C64::new(cfg.total_power / v.norm_squared(), 0.0);
    assert!((sol.r_x() - &want).norm() <= 1e-5 * want.norm());
}

#[test]
fn echo_and_illumination_agree_for_one_target() {
    let cfg = presets::bistatic_collocated(28e9, 4, 0.05, 0.2);
    let ch = build_channel_set(&cfg).unwrap();
    let a = solve_maxmin_illumination(&ch, &cfg, &DesignOptions::default()).unwrap();
    let e = solve_maxmin_echo(&ch, &cfg, &DesignOptions::default()).unwrap();
    let w = metrics::echo_weight(&ch, 0, cfg.echo_power_exponent);
    assert!((e.objective_value - w * a.objective_value).abs() <= 1e-6 * e.objective_value);
    assert!((e.r_x() - a.r_x()).norm() <= 1e-5 * a.r_x().norm());
}

#[test]
fn zero_reflection_rejected_by_echo_design() {
    let mut cfg = presets::bistatic_collocated(28e9, 4, 0.05, 0.2);
    cfg.targets[0].reflection = C64::new(0.0, 0.0);
    let ch = build_channel_set(&cfg).unwrap();
    assert!(matches!(
        solve_maxmin_echo(&ch, &cfg, &DesignOptions::default()),
        Err(Error::ZeroReflection { target: 0 })
    ));
}

#[test]
fn crb_objective_matches_recomputed_crb() {
    let cfg = small_multi(Some(-10.0));
    let ch = build_channel_set(&cfg).unwrap();
    let sol = solve_crb_min(&ch, &cfg, &DesignOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let rel = (sol.objective_value - sol.achieved.value).abs() / sol.achieved.value;
    assert!(rel <= 1e-4, "objective {} vs recomputed {}", sol.objective_value, sol.achieved.value);
    assert!((sol.total_power() - cfg.total_power).abs() <= 1e-6 * cfg.total_power);
    for (u, s) in sol.sinr.iter().enumerate() {
        assert!(*s >= cfg.users[u].sinr_threshold * (1.0 - 1e-6));
    }
}

#[test]
fn infeasible_sinr_reports_bound() {
    let mut cfg = presets::bistatic_collocated(28e9, 4, 0.05, 0.2);
    let ch = build_channel_set(&cfg).unwrap();
    cfg.users[0].sinr_threshold = 2.0 * single_user_max_sinr(&ch, &cfg, 0);
    match solve_crb_min(&ch, &cfg, &DesignOptions::default()) {
        Err(Error::Infeasible(r)) => assert!(!r.feasible),
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn extraction_is_fixed_point_on_rank_one() {
    let cfg = presets::bistatic_collocated(28e9, 3, 0.05, 0.2);
    let ch = build_channel_set(&cfg).unwrap();
    let h = ch.h(0);
    let w = &h * h.adjoint();
    let n = ch.num_tx();
    let sol = DesignSolution {
        basis: CMatrix::identity(n, n),
        w_reduced: vec![w.clone()],
        rd_reduced: CMatrix::zeros(n, n),
        objective_value: 0.0,
        sinr: vec![],
        status: SolveStatus::Optimal,
        achieved: AchievedMetric { kind: MetricKind::SumCrb, value: 0.0 },
        diagnostics: SolveDiagnostics::default(),
    };
    let out = extract_rank_one(sol, &ch, &cfg, &SolverSettings::default()).unwrap();
    assert!((&out.w_reduced[0] - &w).norm() <= 1e-12 * w.norm());
    assert!(out.rd_reduced.norm() <= 1e-12 * w.norm());
}

#[test]
fn extraction_preserves_sinr_on_random_high_rank() {
    let cfg = small_multi(Some(0.0));
    let ch = build_channel_set(&cfg).unwrap();
    let n = ch.num_tx();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w: Vec<CMatrix> = (0..2).map(|_| oracle::random_psd(&mut rng, n, n)).collect();
    let rd = oracle::random_psd(&mut rng, n, n);
    let sol = DesignSolution {
        basis: CMatrix::identity(n, n),
        w_reduced: w,
        rd_reduced: rd,
        objective_value: 0.0,
        sinr: vec![],
        status: SolveStatus::Optimal,
        achieved: AchievedMetric { kind: MetricKind::SumCrb, value: 0.0 },
        diagnostics: SolveDiagnostics::default(),
    };
    let before = metrics::all_sinr(&ch, &sol, cfg.comm_noise_power);
    let rx_before = sol.r_x();
    let out = extract_rank_one(sol, &ch, &cfg, &SolverSettings::default()).unwrap();
    let after = metrics::all_sinr(&ch, &out, cfg.comm_noise_power);
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).abs() <= 1e-8 * a.abs());
    }
    let rd = out.r_d();
    assert!(linalg::min_eigenvalue(&rd) >= -1e-8 * linalg::trace_re(&rd));
    assert!((out.r_x() - &rx_before).norm() <= 1e-12 * rx_before.norm());
    for w in &out.w_reduced {
        let (vals, _) = linalg::hermitian_eigen(w);
        assert!(vals[vals.len() - 2].abs() <= RANK_TOL * vals[vals.len() - 1]);
    }
}

#[test]
fn dedicated_beams_reconstruct() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    assert!(dedicated_beamformers_from_rd(&CMatrix::zeros(4, 4), 1e-9).is_empty());
    let rd = oracle::random_psd(&mut rng, 5, 3);
    let beams = dedicated_beamformers_from_rd(&rd, 1e-9);
    assert_eq!(beams.len(), 3);
    let sum = beams.iter().fold(CMatrix::zeros(5, 5), |acc, w| acc + w * w.adjoint());
    assert!((sum - &rd).norm() <= 1e-8 * rd.norm());
    let q = oracle::random_complex(&mut rng, 4, 1).column(0).into_owned();
    let beams = dedicated_beamformers_from_rd(&(&q * q.adjoint()), 1e-9);
    assert_eq!(beams.len(), 1);
    let phase = beams[0].dotc(&q) / C64::new(q.norm_squared(), 0.0);
    assert!((phase.norm() - 1.0).abs() < 1e-10);
}
