mod common;

use std::f64::consts::{E, PI};

use eigenhess::bounds::*;
use eigenhess::geometry::{GeometryModel, Vec4};
use eigenhess::pathwise::{estimate, BoundaryScheme, SimConfig};
use eigenhess::spectra::{enumerate_eigenpairs, sup_norms, BoundaryCondition};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn disk_dirichlet(lambda: f64) -> DirichletBoundInputs {
    DirichletBoundInputs::from_model(&GeometryModel::disk(1.0).unwrap(), lambda, DEFAULT_K_FLOOR)
}

fn zero_neumann(lambda: f64) -> NeumannBoundInputs {
    NeumannBoundInputs {
        n: 2,
        k0: 0.0,
        k1: 0.0,
        k2: 0.0,
        sigma: 0.0,
        sigma1: 0.0,
        sigma2: 0.0,
        k_sect: 0.0,
        r1: 1.0,
        lambda,
    }
}

#[test]
fn ell_examples_and_continuity() {
    assert_eq!(ell(0.25, 1.0, 0.0), 0.75);
    for (s, k) in [(0.0, 0.0), (2.0, 1.0), (1.0, -3.0), (0.5, 1e-9)] {
        assert_eq!(ell(0.0, s, k), 1.0);
    }
    assert!((ell(PI / 3.0, 0.0, 1.0) - 0.5).abs() < 1e-15);
    for t in [0.1, 0.5, 1.3] {
        for s in [0.0, 1.0, -1.0] {
            let at0 = ell(t, s, 0.0);
            assert!((ell(t, s, 1e-6) - at0).abs() < 1e-5);
            assert!((ell(t, s, -1e-6) - at0).abs() < 1e-5);
        }
    }
    // Derivative against central differences on each branch.
    for (s, k) in [(1.0, 0.0), (0.4, 2.0), (0.7, -1.5)] {
        let h = 1e-6;
        let fd = (ell(0.6 + h, s, k) - ell(0.6 - h, s, k)) / (2.0 * h);
        assert!((ell_prime(0.6, s, k) - fd).abs() < 1e-8);
    }
}

#[test]
fn ell_inverse_examples() {
    assert!((ell_inverse(0.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    assert!((ell_inverse(0.0, 0.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-12);
    let got = ell_inverse(0.5, 1.0, 1.0).unwrap();
    let oracle = common::bisect_root(|t| t.cos() - t.sin() - 0.5, 0.0, 1.0);
    let closed = (1.0 / (2.0 * 2f64.sqrt())).acos() - PI / 4.0;
    assert!((got - oracle).abs() < 1e-12);
    assert!((got - closed).abs() < 1e-12);
    assert!((got - 0.42403).abs() < 1e-5);
    assert_eq!(ell_inverse(0.5, 0.0, 0.0).unwrap(), f64::INFINITY);
    assert!(ell_inverse(1.2, 1.0, 0.0).is_err());
    assert!(ell_inverse(-0.1, 1.0, 0.0).is_err());
}

#[test]
fn collar_weight_examples() {
    assert_eq!(h_profile(0.0, 2, 1.0, 0.0, 1.0).unwrap().log_h, 0.0);
    // One dimension, σ = 1, k = 0, r0 = 1: log h(ρ) = ρ − ρ²/2.
    for rho in [0.1f64, 0.4, 0.8, 1.0, 2.0] {
        let r = rho.min(1.0);
        let got = h_profile(rho, 1, 1.0, 0.0, 1.0).unwrap().log_h;
        assert!((got - (r - r * r / 2.0)).abs() < 1e-9, "{rho}: {got}");
    }
    assert!(matches!(h_profile(0.1, 2, 0.0, 0.0, 1.0), Err(eigenhess::Error::Degenerate(_))));
}

#[test]
fn collar_weight_validity_per_model() {
    for g in GeometryModel::catalog() {
        let c = g.curvature_bounds;
        let k = c.k_sect.max(DEFAULT_K_FLOOR);
        let r0 = g.tubular_radius.min(ell_inverse(0.0, c.sigma, k).unwrap());
        let n = g.dimension;
        let d = 1e-7;
        let slope = h_profile(d, n, c.sigma, k, r0).unwrap().log_h / d;
        assert!(slope >= 1.0 - 1e-6, "{}: {slope}", g.name);
        let mut last = 0.0;
        for i in 0..=20 {
            let lh = h_profile(r0 * i as f64 / 20.0, n, c.sigma, k, r0).unwrap().log_h;
            assert!(lh >= last - 1e-12 && lh >= 0.0);
            last = lh;
        }
        assert!(last <= n as f64 * r0 / 2.0 + 1e-9, "{}: {last}", g.name);
        assert_eq!(h_profile(2.0 * r0, n, c.sigma, k, r0).unwrap().log_h, last);
    }
}

#[test]
fn weight_rate_and_sup() {
    assert_eq!(k_alpha(2, 0.5, 2.0), 6.0);
    assert!((h_sup(2, 0.5) - 1.6487212707001282).abs() < 1e-15);
    assert_eq!(k_alpha(3, 0.5, 0.0), 6.0);
}

#[test]
fn cutoff_examples() {
    let r0 = 0.8;
    assert_eq!(psi_cutoff(0.0, r0).value, 1.0);
    assert_eq!(psi_cutoff(r0, r0).value, 0.0);
    assert!((psi_cutoff(r0 / 2.0, r0).value - 0.125).abs() < 1e-15);
    let (mut d1, mut d2): (f64, f64) = (0.0, 0.0);
    for i in 0..=1000 {
        let p = psi_cutoff(r0 * i as f64 / 1000.0, r0);
        d1 = d1.max(p.first.abs());
        d2 = d2.max(p.second.abs());
    }
    assert!((d1 - 3.0 / r0).abs() < 1e-12);
    assert!(d2 <= 6.0 / (r0 * r0) + 1e-12);
}

#[test]
fn boundary_hessian_constant_examples() {
    let mut z = disk_dirichlet(1.0);
    z.beta = 0.0;
    z.gamma = 0.0;
    let c = boundary_hessian_constants(&z, 0.5, 0.0);
    assert_eq!(c.c1, 0.0);
    assert_eq!(c.c4, 12.0);
    z.lambda = 1e-12;
    assert!((boundary_hessian_constants(&z, 0.5, 0.0).c3 - 24.0).abs() < 1e-10);

    // Disk: α = 2, β = 4, γ = 8 (k floored to 1e-3 moves β, γ slightly); hand arithmetic.
    let d = DirichletBoundInputs { beta: 4.0, gamma: 8.0, ..disk_dirichlet(5.0) };
    let c = boundary_hessian_constants(&d, 0.5, 2.0);
    assert_eq!(c.c1, 2.0);
    assert!((c.c2 - (6.0 * 12.0 + 24.0 * 2.0 + 10.0 + 8.0)).abs() < 1e-12);
    assert!((c.c3 - (36.0 + 24.0 + 12.0 + 5.0)).abs() < 1e-12);
    assert!((c.c4 - 16.0).abs() < 1e-12);
}

#[test]
fn gradient_bound_examples() {
    assert!((boundary_gradient_bound(0.0, PI * PI) - 4.132731354).abs() < 1e-8);
    assert!((boundary_gradient_bound(1.0, 1e-300) - 0.5f64.exp()).abs() < 1e-12);
    // Interval ground state: |φ'| on the boundary over sup|φ| is 1.
    assert!(boundary_gradient_bound(0.0, 1.0) >= 1.0);
    let unit = E.sqrt() * ((2.0 / PI).sqrt() + 0.25 * (PI / 2.0).sqrt());
    assert!((global_gradient_bound(0.0, 0.0, 1.0) - unit).abs() < 1e-12);
    assert!((unit - 1.832081).abs() < 1e-6);
    assert!(global_gradient_bound(0.0, 0.0, 4.0) > global_gradient_bound(0.0, 0.0, 1.0));
    let c = (2.0 / PI).sqrt() + 0.25 * (PI / 2.0).sqrt();
    assert!((global_gradient_bound(2.0, 0.0, PI * PI) - E.sqrt() * (2.0 + c * PI)).abs() < 1e-12);
}

#[test]
fn beta_gamma_examples() {
    assert_eq!(default_beta_gamma(2, 0.0, 1.0), (4.0, 8.0));
    assert_eq!(default_beta_gamma(2, 1.0, 0.0), (4.0, 8.0));
    assert_eq!(default_beta_gamma(5, 0.0, 0.0), (0.0, 0.0));
}

#[test]
fn closed_manifold_examples() {
    assert!((closed_manifold_hessian_bound(0.0, 0.0, 0.0, 3.0) - 3.0 * E).abs() < 1e-14);
    assert!((closed_manifold_hessian_bound(0.0, 1.0, 0.0, 2.0) - 3.0 * E).abs() < 1e-14);
    // Round 2-sphere, first eigenfunction z: Hess z = −z g, so the ratio is 1.
    assert!(closed_manifold_hessian_bound(0.0, 1.0, 0.0, 2.0) >= 1.0);
}

#[test]
fn dirichlet_constant_without_curvature_is_finite() {
    let z = DirichletBoundInputs {
        n: 2,
        k0: 0.0,
        k1: 0.0,
        k2: 0.0,
        sigma: 0.0,
        k_sect: 0.0,
        r1: 0.5,
        beta: 0.0,
        gamma: 0.0,
        lambda: 7.0,
    };
    for v in [AlphaVariant::Printed, AlphaVariant::Sqrt] {
        let o = BoundOptions { alpha_variant: v, k_floor: 0.0 };
        let r = dirichlet_ratio_constant(&z, &o).unwrap();
        assert!(r.constant.is_finite() && r.constant > 0.0);
        assert_eq!(r.intermediates["term1"], 0.0);
        assert!(r.intermediates.values().all(|x| x.is_finite()));
    }
}

#[test]
fn dirichlet_constant_dominates_disk_ground_state() {
    let g = GeometryModel::disk(1.0).unwrap();
    let e = &enumerate_eigenpairs(&g, BoundaryCondition::Dirichlet, 1).unwrap()[0];
    assert!((e.lambda - 5.783185962946784).abs() < 1e-10);
    let s = sup_norms(e, &g);
    let r = dirichlet_ratio_constant(&disk_dirichlet(e.lambda), &BoundOptions::default()).unwrap();
    assert!(r.ratio_bound > s.hess_sup.value / s.phi_sup.value);
    assert_eq!(r.floors["k_floor"], DEFAULT_K_FLOOR);
}

#[test]
fn lambda_normalised_constant() {
    let o = BoundOptions::default();
    let big = dirichlet_normalised_constant(&disk_dirichlet(1e8), &o).unwrap();
    assert!(big.constant.is_finite());
    let grid = [1.0, 10.0, 100.0, 1e3, 1e4];
    for g in GeometryModel::catalog() {
        for l in grid {
            let i = DirichletBoundInputs::from_model(&g, l, o.k_floor);
            let a = dirichlet_normalised_constant(&i, &o).unwrap().constant;
            let b = dirichlet_ratio_constant(&i, &o).unwrap().constant;
            assert!((a - b).abs() <= 1e-12 * b, "{} {l}", g.name);
        }
    }
    let mut last = f64::INFINITY;
    for l in grid {
        let a = dirichlet_normalised_constant(&disk_dirichlet(l), &o).unwrap().constant;
        assert!(a < last, "disk not decreasing at {l}");
        last = a;
    }
    // Without boundary curvature the gradient term grows like √λ and takes over.
    let g = GeometryModel::interval(PI).unwrap();
    let c = |l: f64| {
        let i = DirichletBoundInputs::from_model(&g, l, o.k_floor);
        dirichlet_normalised_constant(&i, &o).unwrap().constant
    };
    assert!(c(100.0) < c(10.0));
    assert!(c(1e3) > c(100.0));
    let growth = c(1e6) / c(1e5);
    assert!(growth > 2.8 && growth < 10f64.sqrt());
    // The literal reading of the display is recorded alongside.
    let r = dirichlet_normalised_constant(&disk_dirichlet(10.0), &o).unwrap();
    assert!(r.intermediates["printed_form"] < r.constant);
}

#[test]
fn neumann_constant_examples() {
    let (k1, k0, k2, l) = (0.7, 0.2, 0.3, 5.0);
    let i = NeumannBoundInputs { k0, k1, k2, ..zero_neumann(l) };
    let c = neumann_collar_constant(&i, &BoundOptions::default()).unwrap().constant;
    let expect = (1.0 + (k1 + 2.0 * k0) / l + k2 / (l * (2.0 * l + 4.0 * k0).sqrt())) * E;
    assert!((c - expect).abs() < 1e-13);
    let c0 = neumann_collar_constant(&zero_neumann(l), &BoundOptions::default()).unwrap().constant;
    assert!((c0 - E).abs() < 1e-15);
    assert!(neumann_collar_constant(&zero_neumann(l), &BoundOptions { k_floor: 0.0, ..Default::default() }).is_err());

    let g = GeometryModel::disk(1.0).unwrap();
    assert_eq!(g.curvature_bounds.sigma1, 0.0);
    for e in enumerate_eigenpairs(&g, BoundaryCondition::Neumann, 10).unwrap() {
        let s = sup_norms(&e, &g);
        let r = neumann_collar_constant(&NeumannBoundInputs::from_model(&g, e.lambda), &BoundOptions::default()).unwrap();
        assert!(r.ratio_bound > s.hess_sup.value / s.phi_sup.value, "{:?}", e.mode_indices);
    }
}

#[test]
fn general_weight_reduces_to_explicit_collar() {
    // With r1 below the first zero of ℓ the collar is r1 and both forms agree.
    let i = NeumannBoundInputs {
        n: 2,
        k0: 0.1,
        k1: 0.5,
        k2: 0.2,
        sigma: 0.3,
        sigma1: 0.3,
        sigma2: 0.4,
        k_sect: 1.0,
        r1: 0.5,
        lambda: 6.0,
    };
    let a = neumann_collar_constant(&i, &BoundOptions::default()).unwrap();
    assert_eq!(a.intermediates["r0"], 0.5);
    let b = neumann_constant_general_h(&i, h_sup(2, 0.5), k_alpha(2, 0.5, 0.6)).unwrap();
    assert!((a.constant - b.constant).abs() <= 1e-12 * a.constant);

    let flat = NeumannBoundInputs { sigma1: 0.0, sigma2: 0.0, ..i };
    let c1 = neumann_constant_general_h(&flat, 1.0, 3.0).unwrap().constant;
    let c2 = neumann_constant_general_h(&flat, 1.0, 30.0).unwrap().constant;
    assert_eq!(c1, c2);
    // The second fundamental form's derivative keeps a K_h dependence alive.
    let tilted = NeumannBoundInputs { sigma1: 0.0, ..i };
    let c3 = neumann_constant_general_h(&tilted, 1.0, 3.0).unwrap().constant;
    let c4 = neumann_constant_general_h(&tilted, 1.0, 30.0).unwrap().constant;
    assert!(c4 > c3);
    let mut last = 0.0;
    for kh in [0.0, 1.0, 5.0, 25.0] {
        let c = neumann_constant_general_h(&i, 2.0, kh).unwrap().constant;
        assert!(c > last);
        last = c;
    }
}

#[test]
fn pointwise_neumann_bound() {
    let (l, t) = (4.0, 0.3);
    let v = neumann_pointwise_hessian_bound(0.0, 0.0, 0.0, 0.0, 0.0, l, t, 1.0, 1.0).unwrap();
    assert!((v - (0.5 * l * t).exp() / t.sqrt()).abs() < 1e-14);
    let (k0, k1, k2) = (0.5, 1.0, 2.0);
    let s = l + 2.0 * k0;
    let v = neumann_pointwise_hessian_bound(k0, k1, k2, 0.0, 0.0, l, 1.0 / s, 1.0, 0.0).unwrap();
    let shape = 0.5f64.exp() * (s.sqrt() + k1 / s.sqrt() + 0.5 * k2 / s);
    assert!((v - shape).abs() < 1e-13);

    // Interval Neumann mode with Monte Carlo local-time moments at t = 1/λ.
    let g = GeometryModel::interval(PI).unwrap();
    let e = &enumerate_eigenpairs(&g, BoundaryCondition::Neumann, 3).unwrap()[2];
    let t = 1.0 / e.lambda;
    let x = Vec4::new(0.3, 0.0, 0.0, 0.0);
    let cfg = SimConfig::new(1e-3, t, 2000, 12).with_scheme(BoundaryScheme::ReflectExact);
    let c = g.curvature_bounds;
    let e_exp = estimate(&g, &x, &Vec4::x(), &cfg, |s| (c.sigma1 * s.local_time).exp()).unwrap().mean;
    let e_mixed = estimate(&g, &x, &Vec4::x(), &cfg, |s| s.local_time).unwrap().mean;
    let b = neumann_pointwise_hessian_bound(c.k0, c.k1, c.k2, c.sigma1, c.sigma2, e.lambda, t, e_exp, e_mixed).unwrap();
    let s = sup_norms(e, &g);
    assert!(b >= s.hess_sup.value / s.grad_sup.value);
}

#[test]
fn reports_round_trip_and_echo() {
    let g = GeometryModel::hemisphere(3).unwrap();
    let i = DirichletBoundInputs::from_model(&g, 8.0, 0.01);
    for v in [AlphaVariant::Printed, AlphaVariant::Sqrt] {
        let o = BoundOptions { alpha_variant: v, k_floor: 0.01 };
        let r = dirichlet_ratio_constant(&i, &o).unwrap();
        assert_eq!(r.variant, v.id());
        assert_eq!(r.inputs["lambda"], 8.0);
        assert_eq!(BoundReport::from_json(&r.to_json()).unwrap(), r);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["inputs", "intermediates", "constant", "variant", "floors"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
    assert_eq!("sqrt".parse::<AlphaVariant>().unwrap(), AlphaVariant::Sqrt);
    assert!("other".parse::<AlphaVariant>().is_err());
}

#[test]
fn sigma_monotonicity_needs_a_pinned_collar() {
    // A free collar shrinks like 1/σ and the collar terms fall faster than the rest grow.
    let o = BoundOptions::default();
    let base = DirichletBoundInputs { sigma: 0.05, r1: 10.0, ..disk_dirichlet(566.6) };
    let doubled = DirichletBoundInputs { sigma: 0.1, ..base };
    let a = dirichlet_ratio_constant(&base, &o).unwrap();
    let b = dirichlet_ratio_constant(&doubled, &o).unwrap();
    assert!(a.intermediates["r0"] < base.r1);
    assert!(b.constant < a.constant);
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut i = disk_dirichlet(1.0);
    i.lambda = 0.0;
    assert!(dirichlet_ratio_constant(&i, &BoundOptions::default()).is_err());
    let mut i = disk_dirichlet(1.0);
    i.sigma = -1.0;
    assert!(dirichlet_normalised_constant(&i, &BoundOptions::default()).is_err());
    let mut i = disk_dirichlet(1.0);
    i.r1 = 0.0;
    assert!(matches!(dirichlet_ratio_constant(&i, &BoundOptions::default()), Err(eigenhess::Error::Degenerate(_))));
    assert!(neumann_pointwise_hessian_bound(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 1.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ell_inverse_is_a_right_inverse(y in 0.01f64..0.99, s in 0.0f64..3.0, k in 0.0f64..3.0) {
        prop_assume!(s + k > 1e-3);
        let t = ell_inverse(y, s, k).unwrap();
        prop_assert!(t.is_finite());
        prop_assert!((ell(t, s, k) - y).abs() < 1e-10);
    }

    #[test]
    fn constant_weakly_increases_with_sigma(s in 0.05f64..2.0, l in 0.5f64..1e3, sqrt in any::<bool>()) {
        let o = BoundOptions { alpha_variant: if sqrt { AlphaVariant::Sqrt } else { AlphaVariant::Printed }, ..Default::default() };
        // Collar pinned at r1 for every σ in range.
        let base = DirichletBoundInputs { sigma: s, r1: 0.1, ..disk_dirichlet(l) };
        let doubled = DirichletBoundInputs { sigma: 2.0 * s, ..base };
        let a = dirichlet_ratio_constant(&base, &o).unwrap().constant;
        let b = dirichlet_ratio_constant(&doubled, &o).unwrap().constant;
        prop_assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn substitution_consistency(
        n in 1usize..4, k0 in 0.0f64..2.0, k1 in 0.0f64..2.0, k2 in 0.0f64..2.0,
        s in 0.0f64..2.0, k in 0.0f64..2.0, r1 in 0.05f64..3.0, l in 0.1f64..1e4,
    ) {
        let (beta, gamma) = default_beta_gamma(n, k.max(DEFAULT_K_FLOOR), s);
        let i = DirichletBoundInputs { n, k0, k1, k2, sigma: s, k_sect: k, r1, beta, gamma, lambda: l };
        for v in [AlphaVariant::Printed, AlphaVariant::Sqrt] {
            let o = BoundOptions { alpha_variant: v, ..Default::default() };
            let a = dirichlet_normalised_constant(&i, &o).unwrap().constant;
            let b = dirichlet_ratio_constant(&i, &o).unwrap().constant;
            prop_assert!(close(a, b, 1e-12));
        }
    }
}
