mod common;

use std::f64::consts::PI;

use common::{half_unit, params, solve_bump};
use nlslab_core::evolution::{
    energy, energy_balance, evolve, evolve_selfsimilar, extinction_probe, mass, mass_balance, EvolveOptions, ExtinctionOptions,
    ExtinctionOutcome, Stepper, ZeroForcing,
};
use nlslab_core::{build_grid, Complex64, ComplexField, GridKind};

fn gaussian(radius: f64, n: usize, amplitude: f64) -> ComplexField {
    let grid = build_grid(GridKind::Interval, 1, radius, n).unwrap();
    ComplexField::from_fn(grid, |x| Complex64::new(amplitude * (-x * x).exp(), 0.0))
}

#[test]
fn linear_flow_preserves_an_eigenmode_amplitude() {
    let p = half_unit(1.0).without_nonlinearity();
    let grid = build_grid(GridKind::Interval, 1, 1.0, 201).unwrap();
    let u0 = ComplexField::from_fn(grid.clone(), |x| Complex64::new((PI * (x + 1.0) / 2.0).sin(), 0.0));
    let stepper = Stepper::new(p, grid.clone(), 1e-2).unwrap();
    let mut u = u0.clone();
    let m0 = mass(u0.values(), &grid);
    for k in 0..50 {
        let next = stepper.step(&u, 1.0 + k as f64 * 1e-2, &ZeroForcing).unwrap().u;
        let (before, after) = (mass(u.values(), &grid), mass(next.values(), &grid));
        assert!((after - before).abs() <= 1e-10 * before);
        u = next;
    }
    // eigenmode: only the phase rotates
    let ratio: Vec<f64> = (1..grid.len() - 1).map(|i| u.values()[i].norm() / u0.values()[i].norm()).collect();
    assert!(ratio.iter().all(|r| (r - 1.0).abs() < 1e-10));
    assert!((mass(u.values(), &grid) - m0).abs() <= 1e-10 * m0);
}

#[test]
fn zero_state_stays_zero() {
    let p = half_unit(2.0);
    let z = ComplexField::zeros(build_grid(GridKind::Interval, 1, 2.0, 51).unwrap());
    let next = nlslab_core::evolution::step(&z, 1.0, 0.1, &p, &ZeroForcing).unwrap();
    assert_eq!(next.max_abs(), 0.0);
    assert_eq!(energy(&z, &p), 0.0);
}

#[test]
fn time_step_refinement_is_second_order() {
    let p = params(0.5, Complex64::new(1.0, 0.0), 0.0, 1, 8.0);
    let u0 = gaussian(8.0, 401, 1.0);
    let run = |steps: usize| {
        let opts = EvolveOptions {
            t0: 1.0,
            t1: 1.5,
            steps,
            snapshot_stride: steps,
        };
        evolve(&u0, &p, &ZeroForcing, None, opts).unwrap().final_state().clone()
    };
    let (a, b, c) = (run(20), run(40), run(80));
    let e1 = a.distance(&b).unwrap();
    let e2 = b.distance(&c).unwrap();
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "order {order} ({e1:e}, {e2:e})");
}

#[test]
fn selfsimilar_run_tracks_the_reference() {
    let s = solve_bump(4.0, 1000, 1e-3, 1e-14);
    let u = nlslab_core::selfsimilar::gauge_backward(&s.g, 0.5);
    let mut devs = Vec::new();
    for steps in [200, 400] {
        let opts = EvolveOptions {
            t0: 1.0,
            t1: 4.0,
            steps,
            snapshot_stride: 50,
        };
        let run = evolve_selfsimilar(&u, &s.forcing, &s.params, opts).unwrap();
        assert!(mass_balance(&run).iter().all(|r| *r <= 1e-6));
        assert!(run.max_edge() <= 1e-10);
        assert!(run.snapshots.iter().all(|(_, f)| f.values()[0] == Complex64::new(0.0, 0.0)));
        devs.push(run.max_deviation());
    }
    assert!(devs[0] <= 1e-2, "{devs:?}");
    assert!(devs[1] <= devs[0], "{devs:?}");
}

#[test]
fn nonlinear_energy_is_nearly_conserved() {
    let p = params(0.5, Complex64::new(1.0, 0.0), 0.0, 1, 8.0);
    let u0 = gaussian(8.0, 801, 1.0);
    let opts = EvolveOptions {
        t0: 1.0,
        t1: 4.0,
        steps: 800,
        snapshot_stride: 800,
    };
    let run = evolve(&u0, &p, &ZeroForcing, None, opts).unwrap();
    assert!(energy_balance(&run).iter().all(|d| *d <= 1e-4));
    assert!(mass_balance(&run).iter().all(|r| *r <= 1e-8));
}

#[test]
fn linear_energy_is_conserved() {
    let p = params(0.5, Complex64::new(1.0, 0.0), 0.0, 1, 8.0).without_nonlinearity();
    let u0 = gaussian(8.0, 401, 1.0);
    let opts = EvolveOptions {
        t0: 1.0,
        t1: 2.0,
        steps: 100,
        snapshot_stride: 100,
    };
    let run = evolve(&u0, &p, &ZeroForcing, None, opts).unwrap();
    assert!(energy_balance(&run).iter().all(|d| *d <= 1e-8));
}

#[test]
fn dissipative_flow_goes_extinct() {
    let p = params(0.5, Complex64::new(0.0, -1.0), 0.0, 1, 8.0);
    let u0 = gaussian(8.0, 401, 1e5);
    let opts = ExtinctionOptions {
        horizon: 2000.0,
        ..ExtinctionOptions::default()
    };
    let report = extinction_probe(&u0, &p, opts).unwrap();
    assert_eq!(report.outcome, ExtinctionOutcome::Extinct);
    assert!(report.strictly_decreasing);
    assert!(report.max_mass_residual <= 1e-6, "{}", report.max_mass_residual);
    assert!(report.masses.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn diagnostics_csv_has_one_row_per_step() {
    let p = half_unit(4.0);
    let u0 = gaussian(4.0, 101, 0.5);
    let opts = EvolveOptions {
        t0: 1.0,
        t1: 1.1,
        steps: 5,
        snapshot_stride: 2,
    };
    let run = evolve(&u0, &p, &ZeroForcing, None, opts).unwrap();
    let mut buf = Vec::new();
    run.write_diagnostics_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("t,mass,energy"));
    assert_eq!(run.snapshots.len(), 4);
}
