#![allow(dead_code)]

use nlslab_core::profile::{solve_profile, ProfileProblem, SolverOptions};
use nlslab_core::selfsimilar::profile_rhs;
use nlslab_core::{build_grid, derive_coefficients, validate_params, Complex64, ComplexField, GridKind, ModelParams, RawParams};

pub fn params(m: f64, a: Complex64, p_im: f64, dim: usize, radius: f64) -> ModelParams {
    validate_params(&RawParams {
        m,
        a,
        p_im,
        dim,
        radius,
    })
    .unwrap()
}

pub fn half_unit(radius: f64) -> ModelParams {
    params(0.5, Complex64::new(1.0, 0.0), 0.0, 1, radius)
}

/// Smooth bump of the given amplitude, cut off at `|x| = 0.5`.
pub fn bump(x: f64, amplitude: f64) -> f64 {
    amplitude * (-x * x / (2.0 * 0.2 * 0.2)).exp() * (1.0 - x * x / 0.25).max(0.0).powi(3)
}

pub struct Solved {
    pub params: ModelParams,
    pub forcing: ComplexField,
    pub rhs: ComplexField,
    pub g: ComplexField,
}

/// Profile for the bump forcing on `[-radius, radius]` with `n` nodes.
pub fn solve_bump(radius: f64, n: usize, amplitude: f64, tol: f64) -> Solved {
    let params = half_unit(radius);
    let grid = build_grid(GridKind::Interval, 1, radius, n).unwrap();
    let forcing = ComplexField::from_fn(grid.clone(), |x| Complex64::new(bump(x, amplitude), 0.0));
    let rhs = profile_rhs(&forcing, 0.5);
    let opts = SolverOptions {
        tol,
        ..Default::default()
    };
    let problem = ProfileProblem::new(params, derive_coefficients(&params), rhs.clone(), opts).unwrap();
    let sol = solve_profile(&problem, &ComplexField::zeros(grid)).unwrap();
    assert!(sol.converged);
    Solved {
        params,
        forcing,
        rhs,
        g: sol.g,
    }
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
