mod common;

use common::{half_unit, observed_order, solve_bump};
use nlslab_core::localization::{
    check_energy_inequality, check_identities, energy_profile, dilated_support_containment, inequality_constants, rho_max_from, support_radius,
    forcing_decay_margin, SUPPORT_THRESHOLD,
};
use nlslab_core::profile::{manufactured_rhs, ProfileProblem, SolverOptions};
use nlslab_core::{build_grid, derive_coefficients, exponent_set, Complex64, ComplexField, GridKind};
use proptest::prelude::*;

#[test]
fn gradient_energy_of_cubic_bump() {
    let grid = build_grid(GridKind::Interval, 1, 2.0, 4001).unwrap();
    let g = ComplexField::from_fn(grid.clone(), |x| Complex64::new((1.0 - x * x).max(0.0).powi(3), 0.0));
    let p = energy_profile(&g, &ComplexField::zeros(grid), 0.5, 0.0, 9).unwrap();
    assert!((p.energy.last().unwrap() - 1024.0 / 385.0).abs() < 1e-3);
    assert_eq!(p.energy[0], 0.0);
}

#[test]
fn ball_quantities_are_monotone() {
    let s = solve_bump(4.0, 800, 1e-2, 1e-10);
    for x0 in [0.0, 0.3, 1.0] {
        let p = energy_profile(&s.g, &s.rhs, 0.5, x0, 101).unwrap();
        for series in [&p.energy, &p.bmass, &p.l2mass, &p.wmass, &p.jterm, &p.gball] {
            assert!(series.iter().all(|v| *v >= 0.0));
            assert!(series.windows(2).all(|w| w[1] >= w[0]));
        }
        assert!(p.flux.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn identity_defects_vanish_under_refinement() {
    let radii = [1.0, 2.0, 4.0];
    let mut hs = Vec::new();
    let mut real = vec![Vec::new(); 3];
    for n in [500, 1000, 2000] {
        let s = solve_bump(4.0, n, 1e-3, 1e-14);
        let coeffs = derive_coefficients(&s.params);
        let d = check_identities(&s.g, &s.rhs, &s.params, &coeffs, 0.0, &radii).unwrap();
        hs.push(s.g.grid().spacing());
        for (k, item) in d.iter().enumerate() {
            real[k].push(item.real);
            assert!(item.real <= 1e-4 && item.imag <= 1e-4);
        }
    }
    for r in &real {
        assert!(observed_order(&hs, r) >= 1.5, "{r:?}");
    }
}

#[test]
fn flux_enters_the_imaginary_identity_with_a_minus_sign() {
    // manufactured complex profile, so the boundary flux has a sizeable imaginary part
    let params = half_unit(2.0);
    let coeffs = derive_coefficients(&params);
    let grid = build_grid(GridKind::Interval, 1, 2.0, 4001).unwrap();
    let g = ComplexField::from_fn(grid.clone(), |x| {
        (1.0 - x * x).max(0.0).powi(3) * Complex64::new(0.0, 1.5 * x * x).exp()
    });
    let problem = ProfileProblem::new(params, coeffs, ComplexField::zeros(grid.clone()), SolverOptions::default()).unwrap();
    let rhs = manufactured_rhs(&problem, &g).unwrap();
    for rho in [0.25, 0.5] {
        let d = check_identities(&g, &rhs, &params, &coeffs, 0.0, &[rho]).unwrap()[0];
        let w = grid.shell_flux(g.values(), rho, 0.0).unwrap();
        // flipping the sign of Im w would move the defect by 2|Im w|
        assert!(w.im.abs() > 0.1, "Im w = {}", w.im);
        assert!(d.imag < 1e-3 * w.im.abs(), "defect {} vs Im w {}", d.imag, w.im);
    }
}

#[test]
fn energy_inequality_holds_on_solutions() {
    for amp in [1e-4, 1e-3, 1e-2] {
        let s = solve_bump(4.0, 1000, amp, 1e-12);
        let coeffs = derive_coefficients(&s.params);
        let k = inequality_constants(s.params.a(), coeffs.b, coeffs.c, 4.0).unwrap();
        assert!(k.satisfies_constraints(s.params.a(), coeffs.c, 4.0));
        for x0 in [0.0, 0.2, 1.0] {
            let p = energy_profile(&s.g, &s.rhs, 0.5, x0, 161).unwrap();
            let chk = check_energy_inequality(&p, k.l, k.m, s.g.grid().spacing());
            assert!(chk.holds, "amp {amp} x0 {x0}: {:?}", chk.margins.iter().cloned().fold(f64::INFINITY, f64::min));
        }
    }
}

#[test]
fn quadratic_parts_scale_quadratically() {
    let s = solve_bump(4.0, 400, 1e-2, 1e-10);
    let p1 = energy_profile(&s.g, &s.rhs, 0.5, 0.0, 21).unwrap();
    let p2 = energy_profile(&s.g.scaled(2.0), &s.rhs, 0.5, 0.0, 21).unwrap();
    for j in 0..21 {
        assert!((p2.energy[j] - 4.0 * p1.energy[j]).abs() <= 1e-12 * p2.energy[j].max(1e-300));
        assert!((p2.l2mass[j] - 4.0 * p1.l2mass[j]).abs() <= 1e-12 * p2.l2mass[j].max(1e-300));
    }
}

#[test]
fn forcing_decay_margin_holds() {
    let params = half_unit(4.0);
    assert_eq!(exponent_set(&params).p_growth, 7.0);
    let grid = build_grid(GridKind::Interval, 1, 4.0, 801).unwrap();
    let zero = ComplexField::zeros(grid.clone());
    let p = energy_profile(&zero, &zero, 0.5, 0.0, 81).unwrap();
    for eps_star in [1e-6, 1.0, 1e3] {
        let m = forcing_decay_margin(&p, 0.5, 2.0, eps_star, &params).unwrap();
        assert!(m.margin >= 0.0 && m.vanishes_inside);
    }
    // small bump centred at distance 2 from x0 = 0
    let rhs = ComplexField::from_fn(grid.clone(), |x| Complex64::new(1e-6 * (1.0 - (x - 2.0).powi(2) / 0.01).max(0.0).powi(3), 0.0));
    let p = energy_profile(&zero, &rhs, 0.5, 0.0, 81).unwrap();
    let m = forcing_decay_margin(&p, 1.0, 3.0, 1.0, &params).unwrap();
    assert!(m.margin >= 0.0 && m.vanishes_inside);
    assert!(forcing_decay_margin(&p, 1.0, 0.5, 1.0, &params).is_err());
}

#[test]
fn containment_on_small_data() {
    let s = solve_bump(4.0, 2000, 1e-3, 1e-12);
    let c = dilated_support_containment(&s.g, &s.forcing, 0.5, SUPPORT_THRESHOLD).unwrap();
    assert!(c.contained);
    let r = support_radius(&s.g, SUPPORT_THRESHOLD);
    assert!(r > 0.0 && r <= 1.0);
    let grid = s.g.grid().clone();
    let z = ComplexField::zeros(grid);
    assert!(dilated_support_containment(&z, &s.forcing, 0.25, SUPPORT_THRESHOLD).unwrap().contained);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_max_is_clamped_and_monotone(
        e in 0.0f64..10.0,
        b in 0.0f64..10.0,
        de in 0.0f64..5.0,
        db in 0.0f64..5.0,
        rho0 in 0.05f64..3.0,
        m in 0.05f64..0.95,
        dim in 1usize..4,
    ) {
        let p = common::params(m, Complex64::new(1.0, 0.0), 0.0, dim, 4.0);
        let base = rho_max_from(e, b, rho0, 1.0, 4.0, 1.0, &p).unwrap().rho_max;
        prop_assert!((0.0..=rho0).contains(&base));
        prop_assert!(rho_max_from(e + de, b, rho0, 1.0, 4.0, 1.0, &p).unwrap().rho_max <= base + 1e-12);
        prop_assert!(rho_max_from(e, b + db, rho0, 1.0, 4.0, 1.0, &p).unwrap().rho_max <= base + 1e-12);
    }

    #[test]
    fn support_radius_non_increasing_in_threshold(t1 in 1e-9f64..0.5, t2 in 1e-9f64..0.5) {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 201).unwrap();
        let f = ComplexField::from_fn(grid, |x| Complex64::new((1.0 - x * x).max(0.0), 0.0));
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(support_radius(&f, hi) <= support_radius(&f, lo));
    }
}
