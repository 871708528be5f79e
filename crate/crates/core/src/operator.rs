//! Second-order finite-difference assembly of `-Δ + b + c|x|²` with
//! homogeneous Dirichlet conditions, and the discrete Dirichlet spectrum.

use std::sync::Arc;

use num_complex::Complex64;

use crate::banded::{BandLu, BandMatrix};
use crate::error::{LabError, Result};
use crate::grid::{Grid, GridKind};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Tridiagonal operator `-Δ_h + b + c|x|²`. Dirichlet rows are identity rows.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: Arc<Grid>,
    b: Complex64,
    c: f64,
    matrix: BandMatrix,
}

/// Off-diagonal couplings `(left, right)` of `-Δ_h` at interior node `i`; the
/// diagonal entry is minus their sum.
fn laplacian_stencil(grid: &Grid, i: usize) -> (f64, f64) {
    let h = grid.spacing();
    let h2 = h * h;
    match grid.kind() {
        GridKind::Interval => (-1.0 / h2, -1.0 / h2),
        GridKind::Radial => {
            let n = grid.dim() as i32;
            if i == 0 {
                // even reflection f_{-1} = f_1
                (0.0, -2.0 * grid.dim() as f64 / h2)
            } else {
                // finite-volume form: flux through r ± h/2 over the shell volume
                let r = grid.nodes()[i];
                let rl = r - 0.5 * h;
                let rr = r + 0.5 * h;
                let volume = (rr.powi(n) - rl.powi(n)) / grid.dim() as f64;
                (-rl.powi(n - 1) / (h * volume), -rr.powi(n - 1) / (h * volume))
            }
        }
    }
}

pub fn assemble_operator(grid: &Arc<Grid>, b: Complex64, c: f64) -> LinearOperator {
    let n = grid.len();
    let mut matrix = BandMatrix::zeros(n, 1, 1);
    for i in 0..n {
        if grid.is_boundary(i) {
            matrix.set(i, i, ONE);
            continue;
        }
        let (left, right) = laplacian_stencil(grid, i);
        let x = grid.abs_coord(i);
        matrix.set(i, i, Complex64::new(-(left + right), 0.0) + b + c * x * x);
        if i > 0 && !grid.is_boundary(i - 1) {
            matrix.set(i, i - 1, Complex64::new(left, 0.0));
        }
        if i + 1 < n && !grid.is_boundary(i + 1) {
            matrix.set(i, i + 1, Complex64::new(right, 0.0));
        }
    }
    LinearOperator {
        grid: grid.clone(),
        b,
        c,
        matrix,
    }
}

impl LinearOperator {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    /// `-Δ_h f + b f + c|x|² f` at interior nodes, zero on the boundary.
    ///
    /// Boundary values of `f` enter the interior rows, so fields that do not
    /// vanish on the boundary are handled consistently.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.len();
        assert_eq!(f.len(), n);
        let mut out = vec![ZERO; n];
        for i in 0..n {
            if g.is_boundary(i) {
                continue;
            }
            let (left, right) = laplacian_stencil(g, i);
            let x = g.abs_coord(i);
            let mut v = (Complex64::new(-(left + right), 0.0) + self.b + self.c * x * x) * f[i];
            if i > 0 {
                v += left * f[i - 1];
            }
            if i + 1 < n {
                v += right * f[i + 1];
            }
            out[i] = v;
        }
        out
    }

    /// Factorisation of the operator plus a diagonal term on interior rows.
    /// Rows listed in `pinned` are replaced by identity rows.
    pub fn factor_shifted(&self, shift: &[Complex64], pinned: &[bool]) -> Result<BandLu> {
        let n = self.grid.len();
        let mut m = self.matrix.clone();
        for i in 0..n {
            if self.grid.is_boundary(i) {
                continue;
            }
            if pinned.get(i).copied().unwrap_or(false) {
                if i > 0 {
                    m.set(i, i - 1, ZERO);
                }
                if i + 1 < n {
                    m.set(i, i + 1, ZERO);
                }
                m.set(i, i, ONE);
            } else if let Some(s) = shift.get(i) {
                m.add(i, i, *s);
            }
        }
        m.factor()
    }

    pub fn factor(&self) -> Result<BandLu> {
        self.matrix.factor()
    }

    /// Solves `L g = rhs` with `g = 0` on the Dirichlet nodes.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut r = rhs.to_vec();
        for (i, v) in r.iter_mut().enumerate() {
            if self.grid.is_boundary(i) {
                *v = ZERO;
            }
        }
        Ok(self.factor()?.solve(&r))
    }
}

pub const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 500;

/// Smallest eigenvalue of the discrete Dirichlet `-Δ_h` by inverse power
/// iteration with a weighted Rayleigh quotient.
pub fn smallest_eigenvalue(grid: &Arc<Grid>) -> Result<f64> {
    let op = assemble_operator(grid, ZERO, 0.0);
    let lu = op.factor()?;
    let w = grid.weights();
    let inner = |x: &[Complex64], y: &[Complex64]| -> f64 {
        x.iter()
            .zip(y)
            .zip(w)
            .map(|((a, b), wi)| wi * (a.conj() * b).re)
            .sum()
    };
    let mut x: Vec<Complex64> = (0..grid.len())
        .map(|i| if grid.is_boundary(i) { ZERO } else { ONE })
        .collect();
    let mut lambda = f64::INFINITY;
    for _ in 0..EIGEN_MAX_ITER {
        let norm = inner(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let ax = op.apply(&x);
        let next = inner(&x, &ax);
        if (next - lambda).abs() <= EIGEN_TOL * next.abs() {
            return Ok(next);
        }
        lambda = next;
        lu.solve_in_place(&mut x);
    }
    Err(LabError::ConvergenceFailure(EIGEN_MAX_ITER))
}
