//! Solver for the stationary profile equation
//! `-Δg + a|g|^{m-1}g + b g + c|x|² g = G` on a Dirichlet grid.
//!
//! The sublinear term is not Lipschitz at the origin, so the iteration works
//! on a regularised nonlinearity `(|z|² + ε²)^{(m-1)/2} z` and drives `ε` to
//! zero through a fixed schedule, while the forcing is ramped up
//! geometrically. Each step freezes the nonlinear coefficient at the current
//! iterate and solves the resulting banded linear system (a lagged-coefficient
//! Picard step), then relaxes with an adaptive damping factor.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid, GridKind};
use crate::model::{uniqueness_radius, DerivedCoefficients, ModelParams};
use crate::operator::{assemble_operator, LinearOperator};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coefficients above this are treated as "node is dead": the unknown is pinned to zero.
const PIN_THRESHOLD: f64 = 1e250;
const MIN_THETA: f64 = 1.0 / 1024.0;
const RESTORE_AFTER: usize = 5;

/// `(|z|² + ε²)^{(m-1)/2} z`, with value `0` at `z = 0`.
pub fn sublinear_term(z: Complex64, m: f64, reg_eps: f64) -> Complex64 {
    let s = z.norm().hypot(reg_eps);
    if s == 0.0 {
        ZERO
    } else {
        z * s.powf(m - 1.0)
    }
}

/// Frozen coefficient `(|z|² + ε²)^{(m-1)/2}`; `None` when it blows up.
fn lagged_coefficient(z: Complex64, m: f64, reg_eps: f64) -> Option<f64> {
    let s = z.norm().hypot(reg_eps);
    if s == 0.0 {
        return None;
    }
    let w = s.powf(m - 1.0);
    (w.is_finite() && w < PIN_THRESHOLD).then_some(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Initial relaxation factor in `(0, 1]`.
    pub theta: f64,
    /// Absolute tolerance on the discrete `L²` defect of the unregularised equation.
    pub tol: f64,
    pub max_iter: usize,
    pub continuation_steps: usize,
    /// First continuation amplitude as a fraction of the full forcing.
    pub continuation_start: f64,
    /// Regularisation levels, finishing with `0`.
    pub reg_schedule: Vec<f64>,
    /// Relative defect at which intermediate stages hand over to the next.
    pub stage_tol: f64,
    /// Iteration cap for intermediate stages.
    pub stage_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            tol: 1e-8,
            max_iter: 5000,
            continuation_steps: 8,
            continuation_start: 0.1,
            reg_schedule: vec![1e-2, 1e-4, 1e-8, 0.0],
            stage_tol: 1e-6,
            stage_max_iter: 400,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(LabError::DomainError(format!("theta = {} not in (0, 1]", self.theta)));
        }
        if !(self.tol > 0.0) {
            return Err(LabError::DomainError(format!("tol = {} must be positive", self.tol)));
        }
        if self.continuation_steps == 0 || !(self.continuation_start > 0.0 && self.continuation_start <= 1.0) {
            return Err(LabError::DomainError("continuation needs at least one step starting in (0, 1]".into()));
        }
        if self.reg_schedule.last() != Some(&0.0) || self.reg_schedule.iter().any(|e| !(*e >= 0.0)) {
            return Err(LabError::DomainError("regularisation schedule must be non-negative and end at 0".into()));
        }
        Ok(())
    }

    /// Geometric ramp from `continuation_start` to `1`.
    pub fn amplitudes(&self) -> Vec<f64> {
        let k = self.continuation_steps;
        if k == 1 {
            return vec![1.0];
        }
        (0..k)
            .map(|j| {
                if j + 1 == k {
                    1.0
                } else {
                    self.continuation_start.powf(1.0 - j as f64 / (k - 1) as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProfileProblem {
    params: ModelParams,
    coeffs: DerivedCoefficients,
    rhs: ComplexField,
    options: SolverOptions,
    operator: LinearOperator,
}

impl ProfileProblem {
    pub fn new(
        params: ModelParams,
        coeffs: DerivedCoefficients,
        rhs: ComplexField,
        options: SolverOptions,
    ) -> Result<Self> {
        options.validate()?;
        if rhs.values().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LabError::DomainError("right-hand side is not finite".into()));
        }
        let operator = assemble_operator(rhs.grid(), coeffs.b, coeffs.c);
        Ok(Self {
            params,
            coeffs,
            rhs,
            options,
            operator,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn coeffs(&self) -> &DerivedCoefficients {
        &self.coeffs
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.rhs.grid()
    }

    /// Right-hand side `G`.
    pub fn rhs(&self) -> &ComplexField {
        &self.rhs
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.operator
    }

    pub fn with_rhs(&self, rhs: ComplexField) -> Result<Self> {
        Self::new(self.params, self.coeffs, rhs, self.options.clone())
    }

    pub fn with_options(&self, options: SolverOptions) -> Result<Self> {
        Self::new(self.params, self.coeffs, self.rhs.clone(), options)
    }
}

/// Left-hand side `-Δ_h g + a N_ε(g) + b g + c|x|² g` (zero on the boundary).
pub fn apply_equation(op: &LinearOperator, a: Complex64, m: f64, g: &[Complex64], reg_eps: f64) -> Vec<Complex64> {
    let grid = op.grid();
    let mut out = op.apply(g);
    for (i, v) in out.iter_mut().enumerate() {
        if !grid.is_boundary(i) {
            *v += a * sublinear_term(g[i], m, reg_eps);
        }
    }
    out
}

fn defect_norm(op: &LinearOperator, a: Complex64, m: f64, g: &[Complex64], rhs: &[Complex64], scale: f64, reg_eps: f64) -> f64 {
    let grid = op.grid();
    let lhs = apply_equation(op, a, m, g, reg_eps);
    let d: Vec<Complex64> = lhs
        .iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (l, r))| if grid.is_boundary(i) { ZERO } else { l - scale * r })
        .collect();
    grid.l2_norm(&d)
}

/// Discrete `L²` norm of the defect of the unregularised equation over interior nodes.
pub fn residual(problem: &ProfileProblem, g: &ComplexField) -> Result<f64> {
    if !g.same_grid(&problem.rhs) {
        return Err(LabError::GridMismatch);
    }
    Ok(defect_norm(
        &problem.operator,
        problem.params.a(),
        problem.params.m(),
        g.values(),
        problem.rhs.values(),
        1.0,
        0.0,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    /// Defect of the stage equation (current amplitude and regularisation).
    pub residual: f64,
    pub theta: f64,
    pub reg_eps: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSolution {
    pub g: ComplexField,
    /// Unregularised defect at full forcing.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistoryEntry>,
}

impl ProfileSolution {
    pub fn history_json(&self) -> String {
        serde_json::to_string_pretty(&self.history).expect("history serialises")
    }
}

pub fn solve_profile(problem: &ProfileProblem, initial_guess: &ComplexField) -> Result<ProfileSolution> {
    if !initial_guess.same_grid(&problem.rhs) {
        return Err(LabError::GridMismatch);
    }
    let opts = &problem.options;
    let grid = problem.grid().clone();
    let op = &problem.operator;
    let a = problem.params.a();
    let m = problem.params.m();
    let full_rhs = problem.rhs.values();
    let n = grid.len();

    let mut g: Vec<Complex64> = initial_guess.values().to_vec();
    for (i, v) in g.iter_mut().enumerate() {
        if grid.is_boundary(i) {
            *v = ZERO;
        }
    }

    let amplitudes = if problem.rhs.is_zero() { vec![1.0] } else { opts.amplitudes() };
    let rhs_norm = problem.rhs.l2_norm();
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut best = (f64::INFINITY, g.clone());

    let mut shift = vec![ZERO; n];
    let mut pinned = vec![false; n];

    for (ai, &amp) in amplitudes.iter().enumerate() {
        let last_amp = ai + 1 == amplitudes.len();
        for (ei, &eps) in opts.reg_schedule.iter().enumerate() {
            let final_stage = last_amp && ei + 1 == opts.reg_schedule.len();
            let stage_target = if final_stage {
                opts.tol
            } else {
                opts.tol.max(opts.stage_tol * amp * rhs_norm)
            };
            let mut theta = opts.theta;
            let mut decreases = 0usize;
            let mut prev = defect_norm(op, a, m, &g, full_rhs, amp, eps);
            let mut stage_iters = 0usize;
            loop {
                if last_amp {
                    let unreg = defect_norm(op, a, m, &g, full_rhs, 1.0, 0.0);
                    if unreg < best.0 {
                        best = (unreg, g.clone());
                    }
                    if unreg <= opts.tol && iterations > 0 {
                        return Ok(ProfileSolution {
                            g: ComplexField::new(grid, g)?,
                            residual_norm: unreg,
                            iterations,
                            converged: true,
                            history,
                        });
                    }
                }
                if !final_stage && (prev <= stage_target || stage_iters >= opts.stage_max_iter) {
                    break;
                }
                if iterations >= opts.max_iter {
                    // stopped before full forcing was reached
                    if !last_amp {
                        best = (defect_norm(op, a, m, &g, full_rhs, 1.0, 0.0), g.clone());
                    }
                    return Err(LabError::NonConvergence(Box::new(ProfileSolution {
                        g: ComplexField::new(grid, best.1)?,
                        residual_norm: best.0,
                        iterations,
                        converged: false,
                        history,
                    })));
                }

                for i in 0..n {
                    match lagged_coefficient(g[i], m, eps) {
                        Some(w) => {
                            shift[i] = a * w;
                            pinned[i] = false;
                        }
                        None => {
                            shift[i] = ZERO;
                            pinned[i] = true;
                        }
                    }
                }
                let lu = op.factor_shifted(&shift, &pinned)?;
                let mut cand: Vec<Complex64> = (0..n)
                    .map(|i| {
                        if grid.is_boundary(i) || pinned[i] {
                            ZERO
                        } else {
                            amp * full_rhs[i]
                        }
                    })
                    .collect();
                lu.solve_in_place(&mut cand);
                for (gi, ci) in g.iter_mut().zip(&cand) {
                    *gi = (1.0 - theta) * *gi + theta * ci;
                }
                iterations += 1;
                stage_iters += 1;

                let res = defect_norm(op, a, m, &g, full_rhs, amp, eps);
                history.push(HistoryEntry {
                    iteration: iterations,
                    residual: res,
                    theta,
                    reg_eps: eps,
                    amplitude: amp,
                });
                if res > prev {
                    theta = (0.5 * theta).max(MIN_THETA);
                    decreases = 0;
                } else {
                    decreases += 1;
                    if decreases >= RESTORE_AFTER {
                        theta = opts.theta;
                        decreases = 0;
                    }
                }
                prev = res;
            }
        }
    }
    unreachable!("the final stage either converges or exhausts max_iter")
}

/// `‖g‖_{H¹} / ((R² + 1)‖G‖_{L²})`.
pub fn a_priori_ratio(g: &ComplexField, rhs: &ComplexField) -> f64 {
    let r = g.grid().radius();
    let gn = rhs.l2_norm();
    if gn == 0.0 {
        return 0.0;
    }
    g.h1_norm() / ((r * r + 1.0) * gn)
}

/// Compactly supported `C²` bump `(1 - |x|²/ρ²)₊³`.
pub fn cubic_bump(grid: Arc<Grid>, support: f64) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        Complex64::new((1.0 - x * x / (support * support)).max(0.0).powi(3), 0.0)
    })
}

/// Right-hand side for which `g` is an exact discrete solution.
pub fn manufactured_rhs(problem: &ProfileProblem, g: &ComplexField) -> Result<ComplexField> {
    let lhs = apply_equation(&problem.operator, problem.params.a(), problem.params.m(), g.values(), 0.0);
    ComplexField::new(g.grid().clone(), lhs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub max_pairwise_distance: f64,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

/// Solves from every guess and measures how far apart the solutions land.
pub fn uniqueness_probe(problem: &ProfileProblem, guesses: &[ComplexField]) -> Result<UniquenessReport> {
    let a = problem.params.a();
    if !(a.re > 0.0 && a.im == 0.0) {
        return Err(LabError::DomainError(format!(
            "uniqueness needs real positive a (got {a})"
        )));
    }
    let r0 = uniqueness_radius(&problem.params);
    if problem.grid().radius() > r0 {
        return Err(LabError::DomainError(format!(
            "domain radius {} exceeds the uniqueness radius {r0}",
            problem.grid().radius()
        )));
    }
    let sols = guesses
        .iter()
        .map(|g| solve_profile(problem, g))
        .collect::<Result<Vec<_>>>()?;
    let mut max_d: f64 = 0.0;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            max_d = max_d.max(sols[i].g.distance(&sols[j].g)?);
        }
    }
    Ok(UniquenessReport {
        max_pairwise_distance: max_d,
        iterations: sols.iter().map(|s| s.iterations).collect(),
        residuals: sols.iter().map(|s| s.residual_norm).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// `‖g(x) ∓ g(-x)‖` of the solution started from the zero field, which has
/// both parities.
pub fn symmetry_check(problem: &ProfileProblem, parity: Parity) -> Result<f64> {
    let grid = problem.grid().clone();
    if grid.kind() != GridKind::Interval {
        return Err(LabError::DomainError("symmetry check needs an interval grid".into()));
    }
    let sol = solve_profile(problem, &ComplexField::zeros(grid.clone()))?;
    Ok(parity_defect(&sol.g, parity))
}

pub fn parity_defect(g: &ComplexField, parity: Parity) -> f64 {
    let v = g.values();
    let n = v.len();
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let d: Vec<Complex64> = (0..n).map(|i| v[i] - sign * v[n - 1 - i]).collect();
    g.grid().l2_norm(&d)
}
