mod common;

use std::f64::consts::PI;

use common::observed_order;
use nlslab_core::operator::{assemble_operator, smallest_eigenvalue};
use nlslab_core::{build_grid, Complex64, ComplexField, GridKind};
use proptest::prelude::*;

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[test]
fn ball_quadrature_exact_for_linear_data() {
    let grid = build_grid(GridKind::Interval, 1, 2.0, 101).unwrap();
    let f: Vec<f64> = grid.nodes().iter().map(|x| 3.0 * x - 0.5).collect();
    for (rho, x0) in [(0.37f64, 0.1f64), (1.0, -0.4), (2.5, 0.0), (0.013, 1.9)] {
        let (lo, hi) = ((x0 - rho).max(-2.0), (x0 + rho).min(2.0));
        let exact = 1.5 * (hi * hi - lo * lo) - 0.5 * (hi - lo);
        assert!((grid.integrate_ball(&f, rho, x0).unwrap() - exact).abs() < 1e-12);
    }
}

#[test]
fn radial_quadrature_exact_for_linear_profiles() {
    // ∫_{B(0,ρ)} (1 + r) dx in R³ = 4π(ρ³/3 + ρ⁴/4)
    let grid = build_grid(GridKind::Radial, 3, 1.0, 64).unwrap();
    let f: Vec<f64> = grid.nodes().iter().map(|r| 1.0 + r).collect();
    for rho in [0.1f64, 0.55, 1.0] {
        let exact = 4.0 * PI * (rho.powi(3) / 3.0 + rho.powi(4) / 4.0);
        assert!((grid.integrate_ball(&f, rho, 0.0).unwrap() - exact).abs() < 1e-12);
    }
}

#[test]
fn integration_by_parts_defect_vanishes() {
    let mut hs = Vec::new();
    let mut defects = Vec::new();
    for n in [100, 200, 400] {
        let grid = build_grid(GridKind::Interval, 1, 1.0, n).unwrap();
        let f = ComplexField::from_fn_dirichlet(grid.clone(), |x| c((PI * (x + 1.0) / 2.0).sin() * (1.0 + x * x)));
        let lap = assemble_operator(&grid, c(0.0), 0.0).apply(f.values());
        let w = grid.weights();
        let pairing: f64 = lap.iter().zip(f.values()).zip(w).map(|((l, v), wi)| wi * (l * v.conj()).re).sum();
        let grad = grid.l2_norm(&grid.gradient(f.values())).powi(2);
        hs.push(grid.spacing());
        defects.push((pairing - grad).abs());
    }
    assert!(observed_order(&hs, &defects) >= 1.0, "{defects:?}");
}

#[test]
fn laplacian_is_second_order() {
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [101, 201, 401] {
        let grid = build_grid(GridKind::Interval, 1, 1.0, n).unwrap();
        let f: Vec<Complex64> = grid.nodes().iter().map(|&x| Complex64::new((2.0 * x).cos(), x.powi(3))).collect();
        let lap = assemble_operator(&grid, c(0.0), 0.0).apply(&f);
        let err = (1..n - 1)
            .map(|i| {
                let x = grid.nodes()[i];
                let exact = -Complex64::new(-4.0 * (2.0 * x).cos(), 6.0 * x);
                (lap[i] - exact).norm()
            })
            .fold(0.0, f64::max);
        hs.push(grid.spacing());
        errs.push(err);
    }
    assert!(observed_order(&hs, &errs) >= 1.9, "{errs:?}");
}

#[test]
fn radial_laplacian_is_second_order() {
    // -Δ cos(r) in R³ = cos r + 2 sin(r)/r
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [101, 201, 401] {
        let grid = build_grid(GridKind::Radial, 3, 1.0, n).unwrap();
        let f: Vec<Complex64> = grid.nodes().iter().map(|&r| c(r.cos())).collect();
        let lap = assemble_operator(&grid, c(0.0), 0.0).apply(&f);
        let err = (0..n - 1)
            .map(|i| {
                let r = grid.nodes()[i];
                let exact = if r == 0.0 { 3.0 } else { r.cos() + 2.0 * r.sin() / r };
                (lap[i].re - exact).abs()
            })
            .fold(0.0, f64::max);
        hs.push(grid.spacing());
        errs.push(err);
    }
    assert!(observed_order(&hs, &errs) >= 1.9, "{errs:?}");
}

#[test]
fn poincare_constants() {
    let g = build_grid(GridKind::Interval, 1, 1.0, 2001).unwrap();
    let l1 = smallest_eigenvalue(&g).unwrap();
    assert!((l1 - PI * PI / 4.0).abs() <= 1e-3);
    for r in [1.0f64, 2.0, 4.0] {
        let g = build_grid(GridKind::Interval, 1, r, 2001).unwrap();
        let l1 = smallest_eigenvalue(&g).unwrap();
        assert!(2.0 * r * r * l1 >= 1.0);
        assert!(l1 >= (1.0 - 1e-2) * (PI / (2.0 * r)).powi(2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_integral_monotone_in_radius(
        coeffs in prop::collection::vec(0.0f64..2.0, 4),
        x0 in -1.5f64..1.5,
        r1 in 0.0f64..3.0,
        dr in 0.0f64..1.0,
    ) {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 97).unwrap();
        let f: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|x| coeffs[0] + coeffs[1] * x.sin().abs() + coeffs[2] * x * x + coeffs[3] * (3.0 * x).cos().powi(2))
            .collect();
        let a = grid.integrate_ball(&f, r1, x0).unwrap();
        let b = grid.integrate_ball(&f, r1 + dr, x0).unwrap();
        prop_assert!(b >= a - 1e-14);
    }

    #[test]
    fn radial_ball_integral_monotone(r1 in 0.0f64..1.2, dr in 0.0f64..0.5, dim in 1usize..4) {
        let grid = build_grid(GridKind::Radial, dim, 1.0, 50).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|r| (1.0 - r * r).abs() + 0.1).collect();
        let a = grid.integrate_ball(&f, r1, 0.0).unwrap();
        let b = grid.integrate_ball(&f, r1 + dr, 0.0).unwrap();
        prop_assert!(b >= a - 1e-14);
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec((-1e6f64..1e6, -1e-6f64..1e-6), 17)) {
        let grid = build_grid(GridKind::Interval, 1, 1.0, 17).unwrap();
        let field = ComplexField::new(grid.clone(), values.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        let mut buf = Vec::new();
        field.write_csv(&mut buf).unwrap();
        let back = ComplexField::read_csv(grid, buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), field.values());
    }
}
