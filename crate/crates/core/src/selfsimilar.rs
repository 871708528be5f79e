//! Gauge changes between the profile `U` and the unknown `g`, self-similar
//! space-time fields built from a profile, and the associated scaling laws.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid, GridKind};
use crate::model::ModelParams;
use crate::profile::sublinear_term;

fn gauge_phase(x: f64, c_gauge: f64) -> Complex64 {
    Complex64::new(0.0, -c_gauge * x * x / 4.0).exp()
}

/// `g(x) = U(x) exp(-i c_gauge |x|²/4)`.
pub fn gauge_forward(u: &ComplexField, c_gauge: f64) -> ComplexField {
    let grid = u.grid().clone();
    let values = u
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(v, &x)| v * gauge_phase(x, c_gauge))
        .collect();
    ComplexField::new(grid, values).expect("same grid")
}

/// `U(x) = g(x) exp(i c_gauge |x|²/4)`.
pub fn gauge_backward(g: &ComplexField, c_gauge: f64) -> ComplexField {
    gauge_forward(g, -c_gauge)
}

/// Right-hand side `G = -F exp(-i c_gauge |x|²/4)` of the gauged equation.
pub fn profile_rhs(forcing: &ComplexField, c_gauge: f64) -> ComplexField {
    gauge_forward(forcing, c_gauge).map(|v| -v)
}

/// `base^exponent` on the principal branch for a positive real base.
pub fn real_power(base: f64, exponent: Complex64) -> Complex64 {
    (exponent * base.ln()).exp()
}

/// Discrete defect of the profile equation
/// `-ΔU + a|U|^{m-1}U - (ip/2)U + (i/2) x·∇U + F = 0` at interior nodes,
/// with centred differences for the transport term.
pub fn profile_equation_defect(u: &ComplexField, forcing: &ComplexField, params: &ModelParams) -> Result<Vec<Complex64>> {
    if !u.same_grid(forcing) {
        return Err(LabError::GridMismatch);
    }
    let grid = u.grid();
    let lap = crate::operator::assemble_operator(grid, Complex64::new(0.0, 0.0), 0.0);
    let mut out = lap.apply(u.values());
    let du = grid.gradient(u.values());
    let i = Complex64::i();
    let (a, p, m) = (params.a(), params.p(), params.m());
    for (k, v) in out.iter_mut().enumerate() {
        if grid.is_boundary(k) {
            continue;
        }
        let x = grid.nodes()[k];
        let uk = u.values()[k];
        *v += a * sublinear_term(uk, m, 0.0) - i * p / 2.0 * uk + i / 2.0 * x * du[k] + forcing.values()[k];
    }
    Ok(out)
}

/// `‖defect‖_{L²}` of [`profile_equation_defect`].
pub fn profile_equation_residual(u: &ComplexField, forcing: &ComplexField, params: &ModelParams) -> Result<f64> {
    let d = profile_equation_defect(u, forcing, params)?;
    Ok(u.grid().l2_norm(&d))
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(LabError::NonpositiveTime(t))
    }
}

/// `u(t, x) = t^{p/2} U(x/√t)`, with `U` extended by zero outside its grid.
#[derive(Debug, Clone)]
pub struct SelfSimilarSolution {
    profile: ComplexField,
    params: ModelParams,
}

impl SelfSimilarSolution {
    pub fn new(profile: ComplexField, params: ModelParams) -> Self {
        Self { profile, params }
    }

    pub fn profile(&self) -> &ComplexField {
        &self.profile
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn evaluate(&self, t: f64, x: f64) -> Result<Complex64> {
        check_time(t)?;
        let scale = real_power(t, self.params.p() / 2.0);
        Ok(scale * self.profile.at(x / t.sqrt()))
    }

    /// `u(t, ·)` sampled on the nodes of `grid`.
    pub fn sample(&self, t: f64, grid: Arc<Grid>) -> Result<ComplexField> {
        check_time(t)?;
        let scale = real_power(t, self.params.p() / 2.0);
        let st = t.sqrt();
        Ok(ComplexField::from_fn(grid, |x| scale * self.profile.at(x / st)))
    }

    /// Writes `t, x, re, im, abs` rows at `x = √t · node` for every requested time.
    pub fn write_slices<W: Write>(&self, times: &[f64], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "re", "im", "abs"])?;
        for &t in times {
            check_time(t)?;
            for &y in self.profile.grid().nodes() {
                let x = t.sqrt() * y;
                let v = self.evaluate(t, x)?;
                out.write_record(&[
                    format!("{t:.16e}"),
                    format!("{x:.16e}"),
                    format!("{:.16e}", v.re),
                    format!("{:.16e}", v.im),
                    format!("{:.16e}", v.norm()),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// `f(t, x) = t^{(p-2)/2} F(x/√t)`.
#[derive(Debug, Clone)]
pub struct SelfSimilarForcing {
    profile: ComplexField,
    params: ModelParams,
}

impl SelfSimilarForcing {
    pub fn new(profile: ComplexField, params: ModelParams) -> Self {
        Self { profile, params }
    }

    pub fn profile(&self) -> &ComplexField {
        &self.profile
    }

    pub fn evaluate(&self, t: f64, x: f64) -> Result<Complex64> {
        check_time(t)?;
        let scale = real_power(t, (self.params.p() - 2.0) / 2.0);
        Ok(scale * self.profile.at(x / t.sqrt()))
    }

    pub fn sample(&self, t: f64, grid: Arc<Grid>) -> Result<ComplexField> {
        check_time(t)?;
        let scale = real_power(t, (self.params.p() - 2.0) / 2.0);
        let st = t.sqrt();
        Ok(ComplexField::from_fn(grid, |x| scale * self.profile.at(x / st)))
    }
}

/// `|λ^{-p} u(λ²t, λx) - u(t, x)|`.
pub fn scaling_invariance_check(sol: &SelfSimilarSolution, lambda: f64, t: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(LabError::DomainError(format!("lambda = {lambda} must be positive")));
    }
    let lhs = real_power(lambda, -sol.params.p()) * sol.evaluate(lambda * lambda * t, lambda * x)?;
    Ok((lhs - sol.evaluate(t, x)?).norm())
}

/// `t^{1/(1-m) + N/(2q)} ‖U‖_{L^q}`, the `L^q` norm of `u(t)`.
pub fn norm_scaling(u: &ComplexField, params: &ModelParams, q: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if !(q >= 1.0) {
        return Err(LabError::DomainError(format!("q = {q} must be at least 1")));
    }
    let n = params.dim() as f64;
    let exponent = 1.0 / (1.0 - params.m()) + if q.is_infinite() { 0.0 } else { n / (2.0 * q) };
    Ok(t.powf(exponent) * u.grid().lq_norm(u.values(), q))
}

/// Grid with the same kind and dimension whose radius is `factor` times larger
/// and whose spacing is unchanged (rounded up to whole cells).
pub fn widened_grid(grid: &Grid, factor: f64) -> Result<Arc<Grid>> {
    let radius = grid.radius() * factor;
    let cells = (radius / grid.spacing()).ceil() as usize;
    let n = match grid.kind() {
        GridKind::Interval => 2 * cells + 1,
        GridKind::Radial => cells + 1,
    };
    crate::grid::build_grid(grid.kind(), grid.dim(), cells as f64 * grid.spacing(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::{validate_params, RawParams};

    fn params() -> ModelParams {
        validate_params(&RawParams {
            m: 0.5,
            a: Complex64::new(1.0, 0.0),
            p_im: 0.7,
            dim: 1,
            radius: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn gauge_roundtrip_and_modulus() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 101).unwrap();
        let u = ComplexField::from_fn(grid, |x| Complex64::new(x.cos(), x * 0.3));
        let g = gauge_forward(&u, 0.5);
        let back = gauge_backward(&g, 0.5);
        for ((a, b), c) in u.values().iter().zip(g.values()).zip(back.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
            assert!((a - c).norm() < 1e-14);
        }
        assert_eq!(g.at(0.0), u.at(0.0));
    }

    #[test]
    fn evaluation_at_unit_time() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 101).unwrap();
        let u = ComplexField::from_fn(grid, |x| Complex64::new((1.0 - x * x).max(0.0), 0.0));
        let sol = SelfSimilarSolution::new(u.clone(), params());
        assert_eq!(sol.evaluate(1.0, 0.3).unwrap(), u.at(0.3));
        assert!(matches!(sol.evaluate(0.0, 0.3), Err(LabError::NonpositiveTime(_))));
        assert_eq!(sol.evaluate(4.0, 2.5).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(scaling_invariance_check(&sol, 1.0, 1.0, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn forcing_scaling_identity() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 401).unwrap();
        let f = ComplexField::from_fn(grid, |x| Complex64::new((-x * x).exp(), 0.5 * x));
        let p = params();
        let frc = SelfSimilarForcing::new(f, p);
        let lhs = frc.evaluate(1.0, 0.3).unwrap();
        let rhs = real_power(2.0, -(p.p() - 2.0)) * frc.evaluate(4.0, 0.6).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn complex_power_modulus() {
        let p = Complex64::new(4.0, -1.3);
        assert!((real_power(2.5, p).norm() - 2.5f64.powf(4.0)).abs() < 1e-12);
    }
}
