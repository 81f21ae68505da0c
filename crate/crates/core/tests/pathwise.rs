mod common;

use std::f64::consts::PI;

use eigenhess::geometry::{GeometryModel, Mat4, Vec4};
use eigenhess::pathwise::*;
use eigenhess::spectra::{enumerate_eigenpairs, BoundaryCondition, EigenPair};
use proptest::prelude::*;
use rand::RngExt;
use rand_distr::StandardNormal;

fn e1() -> Vec4 {
    Vec4::new(1.0, 0.0, 0.0, 0.0)
}

fn pair(g: &GeometryModel, bc: BoundaryCondition, idx: &[i64]) -> EigenPair {
    enumerate_eigenpairs(g, bc, 20)
        .unwrap()
        .into_iter()
        .find(|e| e.mode_indices == idx)
        .expect("mode in catalog")
}

fn within_3se(est: &McEstimate, truth: f64) -> bool {
    (est.mean - truth).abs() <= 3.0 * est.stderr
}

#[test]
fn free_motion_variance_is_n_t() {
    let g = GeometryModel::boxed(&[100.0, 100.0]).unwrap();
    let x = Vec4::new(50.0, 50.0, 0.0, 0.0);
    let cfg = SimConfig::new(1e-2, 0.5, 20_000, 11);
    let est = estimate(&g, &x, &e1(), &cfg, |s| (s.position - x).norm_squared()).unwrap();
    assert!(within_3se(&est, 2.0 * 0.5), "{est:?}");
}

#[test]
fn interval_exit_time_mean() {
    let g = GeometryModel::interval(PI).unwrap();
    let x = Vec4::new(PI / 2.0, 0.0, 0.0, 0.0);
    let cfg = SimConfig::new(1e-3, 25.0, 4000, 5).with_bridge_kill(true);
    let est = exit_time_mean(&g, &x, &cfg).unwrap();
    assert!(within_3se(&est, PI * PI / 4.0), "{est:?}");
}

#[test]
fn boundary_start_dies_at_time_zero() {
    let g = GeometryModel::disk(1.0).unwrap();
    let x = Vec4::new(1.0, 0.0, 0.0, 0.0);
    let cfg = SimConfig::new(1e-3, 0.1, 100, 1);
    let s = simulate_path(&g, &x, &Vec4::new(0.0, 1.0, 0.0, 0.0), &cfg, &cfg.plan(), 0).unwrap();
    assert!(!s.alive);
    assert_eq!(s.tau, Some(0.0));
}

#[test]
fn half_line_local_time_mean() {
    let g = GeometryModel::interval(100.0).unwrap();
    let x = Vec4::zeros();
    let t = 1.0;
    let truth = 2.0 * (2.0 * t / PI).sqrt();
    for scheme in [BoundaryScheme::ReflectProject, BoundaryScheme::ReflectExact] {
        let cfg = SimConfig::new(1e-4, t, 20_000, 3).with_scheme(scheme);
        let est = estimate(&g, &x, &e1(), &cfg, |s| s.local_time).unwrap();
        assert!(within_3se(&est, truth), "{scheme:?}: {est:?} vs {truth}");
    }
}

#[test]
fn reflected_interval_equilibrates_to_uniform() {
    let g = GeometryModel::interval(PI).unwrap();
    let x = Vec4::new(0.3, 0.0, 0.0, 0.0);
    let cfg = SimConfig::new(1e-3, 5.0, 2000, 17).with_scheme(BoundaryScheme::ReflectExact);
    let ends = terminal_positions(&g, &x, &cfg).unwrap();
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for p in &ends {
        counts[((p[0] / PI * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = ends.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 0.999 quantile of chi-square with 19 degrees of freedom.
    assert!(chi2 < 43.82, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn interior_paths_accrue_no_local_time() {
    let g = GeometryModel::boxed(&[50.0, 50.0]).unwrap();
    let x = Vec4::new(25.0, 25.0, 0.0, 0.0);
    for scheme in [BoundaryScheme::ReflectProject, BoundaryScheme::ReflectExact] {
        let cfg = SimConfig::new(1e-3, 0.2, 200, 9).with_scheme(scheme);
        let plan = cfg.plan();
        for i in 0..cfg.paths {
            let s = simulate_path(&g, &x, &e1(), &cfg, &plan, i).unwrap();
            assert_eq!(s.local_time, 0.0);
        }
    }
}

#[test]
fn flat_transport_is_exact() {
    let sq = GeometryModel::boxed(&[PI, PI]).unwrap();
    let disk = GeometryModel::disk(1.0).unwrap();
    let cases = [
        (&sq, Vec4::new(1.0, 2.0, 0.0, 0.0), BoundaryScheme::CrossingKill),
        (&disk, Vec4::new(0.2, -0.3, 0.0, 0.0), BoundaryScheme::CrossingKill),
        (&sq, Vec4::new(0.1, 3.0, 0.0, 0.0), BoundaryScheme::ReflectProject),
        (&sq, Vec4::new(0.1, 3.0, 0.0, 0.0), BoundaryScheme::ReflectExact),
    ];
    for (g, x, scheme) in cases {
        let cfg = SimConfig::new(1e-3, 0.5, 100, 21).with_scheme(scheme);
        let plan = cfg.plan();
        let proj = g.tangent_projector(&x);
        for i in 0..cfg.paths {
            simulate_path_with(g, &x, &e1(), &cfg, &plan, i, |s| {
                assert_eq!(s.transport, g.frame(&x));
                assert_eq!(s.w, Vec4::zeros());
                if !scheme.is_reflecting() {
                    assert_eq!(s.q, proj);
                } else {
                    // Contacts on flat faces only flip signs of coordinate directions.
                    let d = s.q.diagonal();
                    assert_eq!(s.q, Mat4::from_diagonal(&d));
                    assert!(d.iter().take(2).all(|c| c.abs() == 1.0));
                }
            })
            .unwrap();
        }
    }
}

#[test]
fn cap_transport_decays_at_ricci_rate() {
    let g = GeometryModel::hemisphere(2).unwrap();
    let x = g.from_chart(&eigenhess::geometry::ChartPoint { coordinates: vec![0.3, 0.1] }).unwrap();
    let cfg = SimConfig::new(1e-4, 1.0, 200, 4);
    let chk = q_norm_check(&g, &x, &cfg).unwrap();
    assert!(chk.passed, "{chk:?}");
    assert!(chk.decay_rel_error < 1e-4, "{chk:?}");
}

#[test]
fn flat_q_norm_is_one() {
    let g = GeometryModel::disk(1.0).unwrap();
    let chk = q_norm_check(&g, &Vec4::new(0.1, 0.2, 0.0, 0.0), &SimConfig::new(1e-3, 0.3, 100, 2)).unwrap();
    assert_eq!(chk.max_excess, 0.0);
    assert_eq!(chk.decay_rel_error, 0.0);
}

fn interior_points(g: &GeometryModel) -> Vec<Vec4> {
    let picks = [[0.5, 0.5, 0.5], [0.3, 0.6, 0.45], [0.7, 0.35, 0.6]];
    picks
        .iter()
        .map(|u| {
            let x = g.from_unit_cube(u);
            assert!(g.rho(&x) > 0.05, "{} {:?}", g.name, x.as_slice());
            x
        })
        .collect()
}

#[test]
fn martingale_drift_over_low_catalog_modes() {
    let cfg = SimConfig::new(1e-3, 0.3, 2000, 31);
    for g in GeometryModel::catalog() {
        let pairs = enumerate_eigenpairs(&g, BoundaryCondition::Dirichlet, 3).unwrap();
        for x in interior_points(&g) {
            let v = g.frame(&x).column(0).into_owned();
            for e in &pairs {
                let m = martingale_check_dirichlet(&g, e, &x, &v, &cfg).unwrap();
                assert!(m.passed, "{} {:?} at {:?}: {m:?}", g.name, e.mode_indices, x.as_slice());
                assert!(m.warning.is_none());
            }
        }
    }
}

#[test]
fn constant_control_has_no_stochastic_integral() {
    let g = GeometryModel::interval(PI).unwrap();
    let e = pair(&g, BoundaryCondition::Dirichlet, &[1]);
    let x = Vec4::new(PI / 2.0, 0.0, 0.0, 0.0);
    let cfg = SimConfig::new(1e-3, 0.3, 5000, 8).with_k(KSchedule::Constant);
    let z = estimate(&g, &x, &e1(), &cfg, |s| s.stoch_int.abs()).unwrap();
    assert_eq!(z.mean, 0.0);
    let m = martingale_check_dirichlet(&g, &e, &x, &e1(), &cfg).unwrap();
    assert!(m.passed, "{m:?}");
}

#[test]
fn boundary_start_warns() {
    let g = GeometryModel::interval(PI).unwrap();
    let e = pair(&g, BoundaryCondition::Dirichlet, &[1]);
    let m = martingale_check_dirichlet(&g, &e, &Vec4::zeros(), &e1(), &SimConfig::new(1e-3, 0.1, 100, 1)).unwrap();
    assert!(m.warning.is_some());
    assert_eq!(m.e_mt.stderr, 0.0);
}

#[test]
fn bismut_requires_unit_control_at_zero() {
    let g = GeometryModel::interval(PI).unwrap();
    let e = pair(&g, BoundaryCondition::Dirichlet, &[1]);
    let half = KSchedule::Custom(KCallback::new("half", |_, _| (0.5, 0.0)));
    let cfg = SimConfig::new(1e-3, 0.1, 100, 1).with_k(half);
    assert!(hessian_via_bismut_dirichlet(&g, &e, &Vec4::new(1.0, 0.0, 0.0, 0.0), &e1(), &cfg).is_err());
}

#[test]
fn neumann_formula_rejects_killing_and_caps() {
    let g = GeometryModel::interval(PI).unwrap();
    let e = pair(&g, BoundaryCondition::Neumann, &[1]);
    let x = Vec4::new(1.0, 0.0, 0.0, 0.0);
    assert!(hessian_via_bismut_neumann(&g, &e, &x, &e1(), &SimConfig::new(1e-3, 0.1, 100, 1)).is_err());
    let cap = GeometryModel::hemisphere(2).unwrap();
    let ec = &enumerate_eigenpairs(&cap, BoundaryCondition::Neumann, 1).unwrap()[0];
    let xc = cap.from_chart(&eigenhess::geometry::ChartPoint { coordinates: vec![0.2, 0.0] }).unwrap();
    let vc = cap.frame(&xc).column(0).into_owned();
    let cfg = SimConfig::new(1e-3, 0.1, 100, 1).with_scheme(BoundaryScheme::ReflectExact);
    assert!(matches!(
        hessian_via_bismut_neumann(&cap, ec, &xc, &vc, &cfg),
        Err(eigenhess::Error::Capability(_))
    ));
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let g = GeometryModel::disk(1.0).unwrap();
    let e = pair(&g, BoundaryCondition::Neumann, &[1, 1, 0]);
    let x = Vec4::new(0.7, 0.2, 0.0, 0.0);
    let v = Vec4::new(0.6, 0.8, 0.0, 0.0);
    let cfg = SimConfig::new(1e-3, 0.2, 500, 77).with_scheme(BoundaryScheme::ReflectExact);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| hessian_via_bismut_neumann(&g, &e, &x, &v, &cfg).unwrap().estimate)
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn reflected_transport_obeys_local_time_bound() {
    let g = GeometryModel::disk(1.0).unwrap();
    for scheme in [BoundaryScheme::ReflectProject, BoundaryScheme::ReflectExact] {
        let cfg = SimConfig::new(1e-3, 0.5, 500, 13).with_scheme(scheme);
        let excess = q_tilde_norm_check(&g, &Vec4::new(0.9, 0.0, 0.0, 0.0), &cfg).unwrap();
        assert!(excess <= 1e-12, "{scheme:?}: {excess}");
    }
}

#[test]
fn dirichlet_bismut_error_shrinks_with_step() {
    // Coarse paths are built from sums of the fine increments so that the
    // differences between step sizes are resolved far below the Monte Carlo error.
    let g = GeometryModel::interval(PI).unwrap();
    let e = pair(&g, BoundaryCondition::Dirichlet, &[1]);
    let x = Vec4::new(0.4, 0.0, 0.0, 0.0);
    let paths = 100_000;
    let seed = 7;
    let dts = [4e-4, 2e-4, 1e-4];
    let cfgs: Vec<SimConfig> = dts.iter().map(|&d| SimConfig::new(d, 0.3, paths, seed)).collect();
    let plans: Vec<Vec<StepCtx>> = cfgs.iter().map(|c| c.plan()).collect();
    let fine = plans[2].len();
    assert_eq!(plans[0].len() * 4, fine);
    let sq = dts[2].sqrt();
    let values = run_paths(paths, |i| {
        let mut rng = path_rng(seed, i);
        let z: Vec<f64> = (0..fine).map(|_| rng.sample::<f64, _>(StandardNormal) * sq).collect();
        let mut out = [0.0; 3];
        for (j, cfg) in cfgs.iter().enumerate() {
            let m = 1 << (2 - j);
            let mut s = PathState::start(&g, &x, &e1());
            for (k, ctx) in plans[j].iter().enumerate() {
                let db: f64 = z[k * m..(k + 1) * m].iter().sum();
                step_killed_bm_with(&g, &mut s, *ctx, &Vec4::new(db, 0.0, 0.0, 0.0), false, &mut rng);
                if !s.alive {
                    break;
                }
            }
            out[j] = martingale_value(&e, &s, cfg);
        }
        Ok(out)
    })
    .unwrap();
    let stat = |f: &dyn Fn(&[f64; 3]) -> f64| {
        let v: Vec<f64> = values.iter().map(f).collect();
        McEstimate::from_samples(&v, seed, 0.0)
    };
    let coarse = stat(&|r| r[0] - r[1]);
    let finer = stat(&|r| r[1] - r[2]);
    assert!(coarse.mean > 3.0 * coarse.stderr, "{coarse:?}");
    assert!(finer.mean > 3.0 * finer.stderr, "{finer:?}");
    let order = (coarse.mean / finer.mean).log2();
    assert!(order >= 0.5, "observed order {order}");
}

#[test]
fn trace_records_have_fixed_width() {
    let g = GeometryModel::disk(1.0).unwrap();
    let cfg = SimConfig::new(1e-2, 0.1, 100, 3).with_scheme(BoundaryScheme::ReflectProject);
    let mut buf = Vec::new();
    write_trace(&g, &Vec4::new(0.9, 0.0, 0.0, 0.0), &cfg, 0, &mut buf).unwrap();
    let rec = 8 * (2 + 2);
    assert_eq!(buf.len(), rec * (cfg.plan().len() + 1));
    let first = f64::from_le_bytes(buf[8..16].try_into().unwrap());
    assert_eq!(first, 0.9);
}

#[test]
fn config_rejects_bad_values_and_unknown_keys() {
    assert!(SimConfig::new(0.0, 1.0, 100, 1).validate().is_err());
    assert!(SimConfig::new(1e-2, 1e-3, 100, 1).validate().is_err());
    assert!(SimConfig::new(1e-3, 1.0, 99, 1).validate().is_err());
    let ok: SimConfig = toml::from_str("dt = 0.001\nhorizon = 0.3\npaths = 1000\nseed = 4\nboundary_scheme = \"reflect-project\"").unwrap();
    assert_eq!(ok.boundary_scheme, BoundaryScheme::ReflectProject);
    assert!(toml::from_str::<SimConfig>("dt = 0.001\nhorizon = 0.3\npaths = 1000\nseed = 4\nsteps = 3").is_err());
}

#[test]
fn control_integrals() {
    let (k2, k1) = KSchedule::Linear.integrals(0.6);
    assert!((k2 - 0.2).abs() < 1e-12 && (k1 - 0.3).abs() < 1e-12);
    assert_eq!(KSchedule::Constant.integrals(0.6), (0.6, 0.6));
    assert_eq!(KSchedule::Linear.eval(0.0, 2.0), (1.0, -0.5));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn local_time_is_nonnegative_and_nondecreasing(
        seed in any::<u64>(),
        r in 0.0f64..1.0,
        exact in any::<bool>(),
        disk in any::<bool>(),
    ) {
        let g = if disk { GeometryModel::disk(1.0).unwrap() } else { GeometryModel::boxed(&[1.0, 2.0]).unwrap() };
        let x = if disk { Vec4::new(r, 0.0, 0.0, 0.0) } else { Vec4::new(r, 2.0 * r, 0.0, 0.0) };
        let scheme = if exact { BoundaryScheme::ReflectExact } else { BoundaryScheme::ReflectProject };
        let cfg = SimConfig::new(1e-2, 0.5, 100, seed).with_scheme(scheme);
        let mut last = 0.0;
        simulate_path_with(&g, &x, &e1(), &cfg, &cfg.plan(), 0, |s| {
            assert!(s.local_time >= last);
            assert!(g.contains(&s.position), "{:?}", s.position.as_slice());
            last = s.local_time;
        }).unwrap();
    }

    #[test]
    fn cap_transport_never_exceeds_one(seed in any::<u64>(), a in -0.8f64..0.8, b in -0.8f64..0.8) {
        let g = GeometryModel::hemisphere(3).unwrap();
        let x = g.from_chart(&eigenhess::geometry::ChartPoint { coordinates: vec![a, b, 0.1] }).unwrap();
        let v = g.frame(&x).column(1).into_owned();
        let cfg = SimConfig::new(1e-3, 0.3, 100, seed);
        simulate_path_with(&g, &x, &v, &cfg, &cfg.plan(), 0, |s| {
            let n = (s.q.transpose() * s.q).symmetric_eigenvalues().max().sqrt();
            assert!(n <= 1.0 + Q_NORM_SLACK);
            assert!((s.position.norm() - 1.0).abs() < 1e-12);
        }).unwrap();
    }

    #[test]
    fn stderr_is_sample_deviation_over_root_n(v in proptest::collection::vec(-10.0f64..10.0, 2..50)) {
        let est = McEstimate::from_samples(&v, 0, 0.0);
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        prop_assert!((est.stderr - sd / n.sqrt()).abs() <= 1e-12 * (1.0 + sd));
    }
}
