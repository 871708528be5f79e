mod common;

use common::{half_unit, solve_bump};
use nlslab_core::localization::support_radius;
use nlslab_core::selfsimilar::{
    gauge_backward, gauge_forward, norm_scaling, profile_equation_residual, real_power, scaling_invariance_check, SelfSimilarForcing,
    SelfSimilarSolution,
};
use nlslab_core::{build_grid, Complex64, ComplexField, GridKind};
use proptest::prelude::*;

#[test]
fn norm_growth_of_the_self_similar_solution() {
    let grid = build_grid(GridKind::Interval, 1, 2.0, 801).unwrap();
    let u = ComplexField::from_fn(grid.clone(), |x| Complex64::new((1.0 - x * x).max(0.0).powi(2), 0.3 * (1.0 - x * x).max(0.0)));
    let p = half_unit(2.0);
    let l2 = u.l2_norm();
    assert!((norm_scaling(&u, &p, 2.0, 4.0).unwrap() / l2 - 4f64.powf(2.25)).abs() < 1e-12);
    assert!((4f64.powf(2.25) - 22.627).abs() < 1e-3);
    assert!((norm_scaling(&u, &p, 2.0, 1.0).unwrap() - l2).abs() < 1e-15);
    assert!(norm_scaling(&u, &p, 2.0, 1e-8).unwrap() < 1e-15);

    // direct quadrature of u(2, ·) on a wider grid
    let sol = SelfSimilarSolution::new(u.clone(), p);
    let wide = build_grid(GridKind::Interval, 1, 4.0, 4001).unwrap();
    let direct = sol.sample(2.0, wide).unwrap().l2_norm();
    let predicted = norm_scaling(&u, &p, 2.0, 2.0).unwrap();
    assert!((direct - predicted).abs() <= 1e-3 * predicted);
}

#[test]
fn support_scales_with_square_root_of_time() {
    let grid = build_grid(GridKind::Interval, 1, 2.0, 801).unwrap();
    let u = ComplexField::from_fn(grid.clone(), |x| Complex64::new((0.5 - x * x).max(0.0), 0.0));
    let sol = SelfSimilarSolution::new(u.clone(), half_unit(2.0));
    let wide = build_grid(GridKind::Interval, 1, 4.0, 1601).unwrap();
    let r0 = support_radius(&u, 1e-6);
    for t in [1.5, 2.0, 3.0] {
        let rt = support_radius(&sol.sample(t, wide.clone()).unwrap(), 1e-6);
        assert!((rt - t.sqrt() * r0).abs() <= 2.0 * wide.spacing() + grid.spacing() * t.sqrt());
    }
}

#[test]
fn gauged_solution_solves_the_profile_equation() {
    // the transported equation for U picks up only O(h²) from the centred transport term
    let mut residuals = Vec::new();
    for n in [500, 1000] {
        let s = solve_bump(4.0, n, 1e-3, 1e-14);
        let u = gauge_backward(&s.g, 0.5);
        residuals.push(profile_equation_residual(&u, &s.forcing, &s.params).unwrap() / s.forcing.l2_norm());
    }
    assert!(residuals[1] < 0.3 * residuals[0], "{residuals:?}");
    assert!(residuals[1] < 1e-3);
}

#[test]
fn zero_fields_stay_zero() {
    let grid = build_grid(GridKind::Interval, 1, 1.0, 32).unwrap();
    let z = ComplexField::zeros(grid);
    assert!(gauge_forward(&z, 0.5).is_zero());
    assert!(gauge_backward(&z, 0.5).is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn scaling_invariance(lambda in 0.2f64..5.0, t in 0.1f64..10.0, x in -3.0f64..3.0, p_im in -2.0f64..2.0) {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 401).unwrap();
        let u = ComplexField::from_fn(grid, |y| Complex64::new((1.0 - y * y).max(0.0).powi(3), y * (1.0 - y * y).max(0.0)));
        let p = common::params(0.5, Complex64::new(1.0, 0.0), p_im, 1, 2.0);
        let sol = SelfSimilarSolution::new(u, p);
        let scale = sol.evaluate(t, x).unwrap().norm().max(1.0);
        prop_assert!(scaling_invariance_check(&sol, lambda, t, x).unwrap() <= 1e-12 * scale * real_power(lambda * lambda * t, p.p() / 2.0).norm().max(1.0));
    }

    #[test]
    fn forcing_scaling_identity(lambda in 0.2f64..5.0, t in 0.1f64..10.0, x in -3.0f64..3.0) {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 401).unwrap();
        let f = ComplexField::from_fn(grid, |y| Complex64::new((-y * y).exp(), 0.5 * y));
        let p = common::params(0.5, Complex64::new(1.0, 0.0), 0.4, 1, 2.0);
        let frc = SelfSimilarForcing::new(f, p);
        let rhs = real_power(lambda, -(p.p() - 2.0)) * frc.evaluate(lambda * lambda * t, lambda * x).unwrap();
        let lhs = frc.evaluate(t, x).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0) * real_power(t, (p.p() - 2.0) / 2.0).norm().max(1.0));
    }

    #[test]
    fn gauge_preserves_modulus_and_norms(seed in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 33), cg in -2.0f64..2.0) {
        let grid = build_grid(GridKind::Interval, 1, 3.0, 33).unwrap();
        let u = ComplexField::new(grid, seed.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        let g = gauge_forward(&u, cg);
        let back = gauge_backward(&g, cg);
        for ((a, b), c) in u.values().iter().zip(g.values()).zip(back.values()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-14);
            prop_assert!((a - c).norm() <= 1e-14);
        }
        prop_assert!((u.l2_norm() - g.l2_norm()).abs() <= 1e-14);
    }
}
