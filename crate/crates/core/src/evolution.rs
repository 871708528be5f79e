//! Implicit-midpoint time stepping of `i u_t = -Δu + a|u|^{m-1}u + f` with
//! homogeneous Dirichlet conditions, plus the balance-law diagnostics.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid};
use crate::localization::{support_radius, SUPPORT_THRESHOLD};
use crate::model::ModelParams;
use crate::operator::{assemble_operator, LinearOperator};
use crate::selfsimilar::{widened_grid, SelfSimilarForcing, SelfSimilarSolution};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Regularisation of the nonlinearity inside the stepper.
pub const STEP_REG_EPS: f64 = 1e-10;
/// Relative tolerance of the inner fixed-point iteration.
pub const INNER_TOL: f64 = 1e-10;
pub const INNER_MAX_ITER: usize = 200;

/// Source term `f(t, ·)` sampled on the nodes of a grid.
pub trait Forcing {
    fn sample(&self, t: f64, grid: &Arc<Grid>) -> Result<Vec<Complex64>>;

    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForcing;

impl Forcing for ZeroForcing {
    fn sample(&self, _t: f64, grid: &Arc<Grid>) -> Result<Vec<Complex64>> {
        Ok(vec![ZERO; grid.len()])
    }

    fn is_zero(&self) -> bool {
        true
    }
}

impl Forcing for SelfSimilarForcing {
    fn sample(&self, t: f64, grid: &Arc<Grid>) -> Result<Vec<Complex64>> {
        Ok(SelfSimilarForcing::sample(self, t, grid.clone())?.into_values())
    }
}

/// Result of one step.
#[derive(Debug, Clone)]
pub struct Step {
    pub u: ComplexField,
    /// Midpoint value `(u + u⁺)/2`.
    pub midpoint: Vec<Complex64>,
    /// Forcing at `t + dt/2`.
    pub forcing: Vec<Complex64>,
    pub inner_iterations: usize,
}

/// Reusable stepper for one grid and parameter set.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: ModelParams,
    grid: Arc<Grid>,
    dt: f64,
    // -Δ_h - 2i/dt
    operator: LinearOperator,
}

impl Stepper {
    pub fn new(params: ModelParams, grid: Arc<Grid>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::DomainError(format!("dt = {dt} must be positive")));
        }
        let operator = assemble_operator(&grid, Complex64::new(0.0, -2.0 / dt), 0.0);
        Ok(Self {
            params,
            grid,
            dt,
            operator,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `u` from `t` to `t + dt`. The midpoint `v` solves
    /// `-Δ_h v + a N(v) - (2i/dt) v = -(2i/dt) u - f(t + dt/2)` by lagging the
    /// nonlinear coefficient, and `u⁺ = 2v - u`.
    pub fn step(&self, u: &ComplexField, t: f64, forcing: &dyn Forcing) -> Result<Step> {
        if !Arc::ptr_eq(u.grid(), &self.grid) && **u.grid() != *self.grid {
            return Err(LabError::GridMismatch);
        }
        let grid = &self.grid;
        let n = grid.len();
        let a = self.params.a();
        let m = self.params.m();
        let f = forcing.sample(t + 0.5 * self.dt, grid)?;
        let k = Complex64::new(0.0, 2.0 / self.dt);
        let rhs: Vec<Complex64> = (0..n)
            .map(|i| if grid.is_boundary(i) { ZERO } else { -k * u.values()[i] - f[i] })
            .collect();

        let mut v: Vec<Complex64> = u.values().to_vec();
        let mut shift = vec![ZERO; n];
        let pinned = vec![false; n];
        let mut iterations = 0;
        loop {
            if iterations >= INNER_MAX_ITER {
                return Err(LabError::InnerNonConvergence { t, iterations });
            }
            for i in 0..n {
                let s = v[i].norm().hypot(STEP_REG_EPS);
                shift[i] = a * s.powf(m - 1.0);
            }
            let lu = self.operator.factor_shifted(&shift, &pinned)?;
            let next = lu.solve(&rhs);
            iterations += 1;
            let diff: Vec<Complex64> = next.iter().zip(&v).map(|(x, y)| x - y).collect();
            let change = grid.l2_norm(&diff);
            let size = grid.l2_norm(&next);
            v = next;
            if change <= INNER_TOL * size || size == 0.0 {
                break;
            }
        }
        let next: Vec<Complex64> = v.iter().zip(u.values()).map(|(vm, u0)| 2.0 * vm - u0).collect();
        Ok(Step {
            u: ComplexField::new(grid.clone(), next)?,
            midpoint: v,
            forcing: f,
            inner_iterations: iterations,
        })
    }
}

/// One implicit-midpoint step; see [`Stepper::step`].
pub fn step(u: &ComplexField, t: f64, dt: f64, params: &ModelParams, forcing: &dyn Forcing) -> Result<ComplexField> {
    Ok(Stepper::new(*params, u.grid().clone(), dt)?.step(u, t, forcing)?.u)
}

/// `‖u‖²` with the nodal weights.
pub fn mass(u: &[Complex64], grid: &Grid) -> f64 {
    grid.l2_norm(u).powi(2)
}

/// `½⟨-Δ_h u, u⟩ + a/(m+1) ‖u‖^{m+1}_{m+1}`; real part for complex `a`.
pub fn energy(u: &ComplexField, params: &ModelParams) -> f64 {
    let grid = u.grid();
    let lap = assemble_operator(grid, ZERO, 0.0);
    let lu = lap.apply(u.values());
    let w = grid.weights();
    let kinetic: f64 = lu
        .iter()
        .zip(u.values())
        .zip(w)
        .map(|((l, v), wi)| wi * (l * v.conj()).re)
        .sum();
    let potential = grid.lq_norm(u.values(), params.m() + 1.0).powf(params.m() + 1.0);
    0.5 * kinetic + (params.a() / (params.m() + 1.0)).re * potential
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub mass_before: f64,
    pub mass: f64,
    pub energy: f64,
    /// `‖v‖^{m+1}_{m+1}` at the midpoint, unregularised.
    pub bmass_mid: f64,
    /// `Im ∫ f conj(v)` at the midpoint.
    pub forcing_work: f64,
    /// Largest `|u|` on the outer tenth of the domain.
    pub edge_max: f64,
    pub support_radius: f64,
    /// Relative `L²` distance to the self-similar reference, when there is one.
    pub deviation: Option<f64>,
    pub inner_iterations: usize,
}

impl StepDiagnostics {
    /// Defect of `(‖u⁺‖² - ‖u‖²)/(2 dt) = Im(a) bmass + Im ∫ f conj(v)`
    /// relative to the size of its terms.
    pub fn mass_residual(&self, im_a: f64) -> f64 {
        let lhs = (self.mass - self.mass_before) / (2.0 * self.dt);
        let rhs = im_a * self.bmass_mid + self.forcing_work;
        let scale = (lhs.abs() + (im_a * self.bmass_mid).abs() + self.forcing_work.abs()).max(self.mass);
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionRun {
    pub params: ModelParams,
    pub grid: Arc<Grid>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub initial_mass: f64,
    pub initial_energy: f64,
    pub snapshots: Vec<(f64, ComplexField)>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl EvolutionRun {
    pub fn final_state(&self) -> &ComplexField {
        &self.snapshots.last().expect("runs keep the final state").1
    }

    pub fn max_deviation(&self) -> f64 {
        self.diagnostics
            .iter()
            .filter_map(|d| d.deviation)
            .fold(0.0, f64::max)
    }

    pub fn max_edge(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.edge_max).fold(0.0, f64::max)
    }

    pub fn write_diagnostics_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "t",
            "mass",
            "energy",
            "mass_residual",
            "energy_drift",
            "support_radius",
            "deviation",
        ])?;
        let drift = energy_balance(self);
        let im_a = self.params.a().im;
        for (d, e) in self.diagnostics.iter().zip(drift) {
            out.write_record(&[
                format!("{:.16e}", d.t),
                format!("{:.16e}", d.mass),
                format!("{:.16e}", d.energy),
                format!("{:.16e}", d.mass_residual(im_a)),
                format!("{e:.16e}"),
                format!("{:.16e}", d.support_radius),
                d.deviation.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Options for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    /// Keep every `stride`-th state (the initial and final states are always kept).
    pub snapshot_stride: usize,
}

fn check_span(t0: f64, t1: f64, steps: usize) -> Result<()> {
    if !(t0 > 0.0) {
        return Err(LabError::NonpositiveTime(t0));
    }
    if !(t1 > t0) || steps == 0 {
        return Err(LabError::DomainError(format!(
            "need t1 > t0 and at least one step (got [{t0}, {t1}], {steps} steps)"
        )));
    }
    Ok(())
}

fn edge_max(u: &[Complex64], grid: &Grid) -> f64 {
    let cut = 0.9 * grid.radius();
    (0..grid.len())
        .filter(|&i| grid.abs_coord(i) >= cut)
        .map(|i| u[i].norm())
        .fold(0.0, f64::max)
}

/// Evolves `u0` over `[t0, t1]` with a fixed step. When `reference` is given
/// the relative deviation from it is recorded at every step.
pub fn evolve(
    u0: &ComplexField,
    params: &ModelParams,
    forcing: &dyn Forcing,
    reference: Option<&SelfSimilarSolution>,
    opts: EvolveOptions,
) -> Result<EvolutionRun> {
    check_span(opts.t0, opts.t1, opts.steps)?;
    let grid = u0.grid().clone();
    let dt = (opts.t1 - opts.t0) / opts.steps as f64;
    let stepper = Stepper::new(*params, grid.clone(), dt)?;
    let stride = opts.snapshot_stride.max(1);
    let mut u = u0.clone();
    u.apply_dirichlet();
    let mut snapshots = vec![(opts.t0, u.clone())];
    let mut diagnostics = Vec::with_capacity(opts.steps);
    let initial_mass = mass(u.values(), &grid);
    let initial_energy = energy(&u, params);
    let m = params.m();
    for k in 0..opts.steps {
        let t = opts.t0 + k as f64 * dt;
        let t_next = if k + 1 == opts.steps { opts.t1 } else { t + dt };
        let s = stepper.step(&u, t, forcing)?;
        let mass_before = mass(u.values(), &grid);
        let bmass_mid = grid.lq_norm(&s.midpoint, m + 1.0).powf(m + 1.0);
        let forcing_work: f64 = grid
            .weights()
            .iter()
            .zip(&s.forcing)
            .zip(&s.midpoint)
            .map(|((w, f), v)| w * (f * v.conj()).im)
            .sum();
        u = s.u;
        let deviation = match reference {
            Some(r) => {
                let exact = r.sample(t_next, grid.clone())?;
                let norm = exact.l2_norm();
                Some(if norm == 0.0 { u.l2_norm() } else { u.distance(&exact)? / norm })
            }
            None => None,
        };
        diagnostics.push(StepDiagnostics {
            t: t_next,
            dt,
            mass_before,
            mass: mass(u.values(), &grid),
            energy: energy(&u, params),
            bmass_mid,
            forcing_work,
            edge_max: edge_max(u.values(), &grid),
            support_radius: support_radius(&u, SUPPORT_THRESHOLD),
            deviation,
            inner_iterations: s.inner_iterations,
        });
        if (k + 1) % stride == 0 || k + 1 == opts.steps {
            snapshots.push((t_next, u.clone()));
        }
    }
    Ok(EvolutionRun {
        params: *params,
        grid,
        t0: opts.t0,
        t1: opts.t1,
        steps: opts.steps,
        initial_mass,
        initial_energy,
        snapshots,
        diagnostics,
    })
}

/// Evolution grid for a self-similar run: same spacing as the profile grid,
/// radius `2 √t1` times the support radius of the profile and forcing.
pub fn selfsimilar_grid(profile: &ComplexField, forcing: &ComplexField, t1: f64) -> Result<Arc<Grid>> {
    let grid = profile.grid();
    let support = support_radius(profile, SUPPORT_THRESHOLD).max(support_radius(forcing, SUPPORT_THRESHOLD));
    if support == 0.0 {
        return Ok(grid.clone());
    }
    widened_grid(grid, 2.0 * t1.sqrt() * support / grid.radius())
}

/// Starts from `t0^{p/2} U(·/√t0)` and evolves under the self-similar forcing,
/// recording the deviation from the self-similar solution.
pub fn evolve_selfsimilar(
    profile: &ComplexField,
    forcing: &ComplexField,
    params: &ModelParams,
    opts: EvolveOptions,
) -> Result<EvolutionRun> {
    check_span(opts.t0, opts.t1, opts.steps)?;
    if !profile.same_grid(forcing) {
        return Err(LabError::GridMismatch);
    }
    let grid = selfsimilar_grid(profile, forcing, opts.t1)?;
    let reference = SelfSimilarSolution::new(profile.clone(), *params);
    let frc = SelfSimilarForcing::new(forcing.clone(), *params);
    let u0 = reference.sample(opts.t0, grid)?;
    evolve(&u0, params, &frc, Some(&reference), opts)
}

/// Relative mass-balance defect of every step.
pub fn mass_balance(run: &EvolutionRun) -> Vec<f64> {
    let im_a = run.params.a().im;
    run.diagnostics.iter().map(|d| d.mass_residual(im_a)).collect()
}

/// `|E(t) - E(t0)| / |E(t0)|` per step (absolute when `E(t0) = 0`).
pub fn energy_balance(run: &EvolutionRun) -> Vec<f64> {
    let e0 = run.initial_energy;
    let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
    run.diagnostics.iter().map(|d| (d.energy - e0).abs() / scale).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtinctionOutcome {
    Extinct,
    HorizonReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionReport {
    pub outcome: ExtinctionOutcome,
    /// First time with `‖u‖ ≤ threshold · ‖u0‖`.
    pub time: Option<f64>,
    /// `(t, ‖u(t)‖²)` along the run, starting at `t0`.
    pub masses: Vec<(f64, f64)>,
    pub strictly_decreasing: bool,
    /// Largest relative mass-balance defect over the steps, unregularised.
    pub max_mass_residual: f64,
    /// Same defect measured with the stepper's regularised nonlinearity.
    pub max_scheme_residual: f64,
    pub steps: usize,
}

/// Settings for [`extinction_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionOptions {
    pub t0: f64,
    pub horizon: f64,
    /// Passage threshold relative to `‖u0‖`.
    pub threshold: f64,
    /// Step size is `courant · ‖u‖_∞^{1-m} / |a|`, capped by `max_dt`.
    pub courant: f64,
    pub max_dt: f64,
    pub max_steps: usize,
}

impl Default for ExtinctionOptions {
    fn default() -> Self {
        Self {
            t0: 1.0,
            horizon: 50.0,
            threshold: 1e-10,
            courant: 0.2,
            max_dt: 0.05,
            max_steps: 200_000,
        }
    }
}

/// Evolves an unforced dissipative problem until the `L²` norm drops below
/// `threshold · ‖u0‖` or the horizon is reached.
///
/// The midpoint rule only damps the stiff sublinear term when
/// `dt |a| |u|^{m-1}` stays moderate, so the step follows the solution size.
pub fn extinction_probe(u0: &ComplexField, params: &ModelParams, opts: ExtinctionOptions) -> Result<ExtinctionReport> {
    let a = params.a();
    if !(a.im < 0.0) {
        return Err(LabError::InadmissibleCoefficient(format!(
            "extinction needs Im(a) < 0 (got {a})"
        )));
    }
    if !(opts.t0 > 0.0) {
        return Err(LabError::NonpositiveTime(opts.t0));
    }
    let grid = u0.grid().clone();
    let mut u = u0.clone();
    u.apply_dirichlet();
    let norm0 = u.l2_norm();
    let mut t = opts.t0;
    let mut masses = vec![(t, mass(u.values(), &grid))];
    if norm0 == 0.0 {
        return Ok(ExtinctionReport {
            outcome: ExtinctionOutcome::Extinct,
            time: Some(t),
            masses,
            strictly_decreasing: true,
            max_mass_residual: 0.0,
            max_scheme_residual: 0.0,
            steps: 0,
        });
    }
    let m = params.m();
    let mut strictly = true;
    let mut max_res: f64 = 0.0;
    let mut max_scheme: f64 = 0.0;
    let mut steps = 0;
    while t < opts.horizon && steps < opts.max_steps {
        let dt = (opts.courant * u.max_abs().powf(1.0 - m) / a.norm())
            .min(opts.max_dt)
            .min(opts.horizon - t);
        let s = Stepper::new(*params, grid.clone(), dt)?.step(&u, t, &ZeroForcing)?;
        let before = mass(u.values(), &grid);
        let after = mass(s.u.values(), &grid);
        let diag = StepDiagnostics {
            t: t + dt,
            dt,
            mass_before: before,
            mass: after,
            energy: 0.0,
            bmass_mid: grid.lq_norm(&s.midpoint, m + 1.0).powf(m + 1.0),
            forcing_work: 0.0,
            edge_max: 0.0,
            support_radius: 0.0,
            deviation: None,
            inner_iterations: s.inner_iterations,
        };
        max_res = max_res.max(diag.mass_residual(a.im));
        let regularised: f64 = s
            .midpoint
            .iter()
            .zip(grid.weights())
            .map(|(v, w)| w * v.norm_sqr() * v.norm().hypot(STEP_REG_EPS).powf(m - 1.0))
            .sum();
        max_scheme = max_scheme.max(
            StepDiagnostics {
                bmass_mid: regularised,
                ..diag
            }
            .mass_residual(a.im),
        );
        strictly &= after < before;
        u = s.u;
        t += dt;
        steps += 1;
        masses.push((t, after));
        if u.l2_norm() <= opts.threshold * norm0 {
            return Ok(ExtinctionReport {
                outcome: ExtinctionOutcome::Extinct,
                time: Some(t),
                masses,
                strictly_decreasing: strictly,
                max_mass_residual: max_res,
                max_scheme_residual: max_scheme,
                steps,
            });
        }
    }
    Ok(ExtinctionReport {
        outcome: ExtinctionOutcome::HorizonReached,
        time: None,
        masses,
        strictly_decreasing: strictly,
        max_mass_residual: max_res,
        max_scheme_residual: max_scheme,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use crate::model::{validate_params, RawParams};

    fn params(a: Complex64) -> ModelParams {
        validate_params(&RawParams {
            m: 0.5,
            a,
            p_im: 0.0,
            dim: 1,
            radius: 4.0,
        })
        .unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 65).unwrap();
        let u = ComplexField::zeros(grid);
        let next = step(&u, 1.0, 0.01, &params(Complex64::new(1.0, 0.0)), &ZeroForcing).unwrap();
        assert!(next.is_zero());
    }

    #[test]
    fn rejects_bad_span() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 65).unwrap();
        let u = ComplexField::zeros(grid);
        let p = params(Complex64::new(1.0, 0.0));
        let opts = EvolveOptions {
            t0: 0.0,
            t1: 1.0,
            steps: 10,
            snapshot_stride: 1,
        };
        assert!(matches!(evolve(&u, &p, &ZeroForcing, None, opts), Err(LabError::NonpositiveTime(_))));
    }

    #[test]
    fn zero_initial_state_is_extinct() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 65).unwrap();
        let r = extinction_probe(&ComplexField::zeros(grid), &params(Complex64::new(0.0, -1.0)), ExtinctionOptions::default()).unwrap();
        assert_eq!(r.outcome, ExtinctionOutcome::Extinct);
        assert_eq!(r.time, Some(1.0));
    }
}
