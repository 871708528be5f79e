//! Uniform grids on `[-R, R]` and on radial balls `B(0, R)` with Dirichlet
//! boundary, complex nodal fields, and the quadratures used by the energy
//! diagnostics.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// `[-R, R]`, Dirichlet at both ends. One-dimensional only.
    Interval,
    /// Radial coordinate `r ∈ [0, R]` of a ball in `R^N`; Dirichlet at `r = R`,
    /// even symmetry at the origin.
    Radial,
}

/// Surface measure of the unit sphere `S^{N-1}`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        d => 2.0 * PI / (d as f64 - 2.0) * unit_sphere_area(d - 2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    kind: GridKind,
    dim: usize,
    radius: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    boundary: Vec<bool>,
}

pub fn build_grid(kind: GridKind, dim: usize, radius: f64, n: usize) -> Result<Arc<Grid>> {
    Grid::new(kind, dim, radius, n).map(Arc::new)
}

impl Grid {
    pub fn new(kind: GridKind, dim: usize, radius: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(LabError::InvalidDomain(format!(
                "need at least {MIN_NODES} nodes (got {n})"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LabError::InvalidDomain(format!("radius must be positive (got {radius})")));
        }
        if dim < 1 {
            return Err(LabError::InvalidDomain("dimension must be at least 1".into()));
        }
        if kind == GridKind::Interval && dim != 1 {
            return Err(LabError::InvalidDomain(format!(
                "interval grids are one-dimensional (got N = {dim})"
            )));
        }
        Ok(Self::new_unchecked(kind, dim, radius, n))
    }

    // Only used by the documentation-sized examples in the tests; skips the node minimum.
    pub(crate) fn new_unchecked(kind: GridKind, dim: usize, radius: f64, n: usize) -> Self {
        let last = n - 1;
        let (h, nodes): (f64, Vec<f64>) = match kind {
            GridKind::Interval => {
                let h = 2.0 * radius / last as f64;
                (h, (0..n).map(|i| -radius + h * i as f64).collect())
            }
            GridKind::Radial => {
                let h = radius / last as f64;
                (h, (0..n).map(|i| h * i as f64).collect())
            }
        };
        let mut nodes = nodes;
        nodes[last] = radius;
        let mut boundary = vec![false; n];
        boundary[last] = true;
        let weights = match kind {
            GridKind::Interval => {
                boundary[0] = true;
                let mut w = vec![h; n];
                w[0] = 0.5 * h;
                w[last] = 0.5 * h;
                w
            }
            GridKind::Radial => {
                // measure of the shell [r - h/2, r + h/2] ∩ [0, R] around each node
                let s = unit_sphere_area(dim);
                let d = dim as i32;
                let shell = |lo: f64, hi: f64| s * (hi.powi(d) - lo.max(0.0).powi(d)) / dim as f64;
                nodes
                    .iter()
                    .map(|&r| shell(r - 0.5 * h, (r + 0.5 * h).min(radius)))
                    .collect()
            }
        };
        Self {
            kind,
            dim,
            radius,
            h,
            nodes,
            weights,
            boundary,
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Nodal quadrature weights (trapezoid ends, sphere measure on radial grids).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    /// `|x|` at node `i`.
    pub fn abs_coord(&self, i: usize) -> f64 {
        self.nodes[i].abs()
    }

    /// Largest distance from `x0` to a point of the domain.
    pub fn reach(&self, x0: f64) -> f64 {
        self.radius + x0.abs()
    }

    fn check_center(&self, x0: f64) -> Result<()> {
        if self.kind == GridKind::Radial && x0 != 0.0 {
            return Err(LabError::CenterUnsupported(x0));
        }
        Ok(())
    }

    /// Index `j` of the cell `[x_j, x_{j+1}]` containing `x` together with the
    /// linear interpolation weight of node `j + 1`. `None` outside the grid.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let lo = self.nodes[0];
        let hi = self.nodes[self.len() - 1];
        if !(x >= lo && x <= hi) {
            return None;
        }
        let last_cell = self.len() - 2;
        let j = (((x - lo) / self.h).floor() as usize).min(last_cell);
        let s = ((x - self.nodes[j]) / self.h).clamp(0.0, 1.0);
        Some((j, s))
    }

    /// Linear interpolation of nodal values; zero outside the grid.
    pub fn interpolate<T>(&self, values: &[T], x: f64) -> T
    where
        T: Copy + Default + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let x = match self.kind {
            GridKind::Interval => x,
            GridKind::Radial => x.abs(),
        };
        match self.locate(x) {
            Some((j, s)) => values[j] * (1.0 - s) + values[j + 1] * s,
            None => T::default(),
        }
    }

    /// `∫_{Ω ∩ B(x0, ρ)} f` for the piecewise-linear interpolant of nodal values.
    ///
    /// Cells cut by the sphere contribute the exact integral of the linear
    /// interpolant over their covered part, so the result is continuous and
    /// (for non-negative data) non-decreasing in `ρ`.
    pub fn integrate_ball(&self, values: &[f64], rho: f64, x0: f64) -> Result<f64> {
        self.check_center(x0)?;
        if values.len() != self.len() {
            return Err(LabError::GridMismatch);
        }
        if rho <= 0.0 {
            return Ok(0.0);
        }
        Ok(match self.kind {
            GridKind::Interval => self.integrate_segment(values, x0 - rho, x0 + rho),
            GridKind::Radial => self.integrate_shells(values, rho),
        })
    }

    pub fn integrate_ball_complex(&self, values: &[Complex64], rho: f64, x0: f64) -> Result<Complex64> {
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        Ok(Complex64::new(
            self.integrate_ball(&re, rho, x0)?,
            self.integrate_ball(&im, rho, x0)?,
        ))
    }

    fn integrate_segment(&self, f: &[f64], a: f64, b: f64) -> f64 {
        let a = a.max(self.nodes[0]);
        let b = b.min(self.nodes[self.len() - 1]);
        if b <= a {
            return 0.0;
        }
        let (ja, _) = self.locate(a).expect("clamped into grid");
        let (jb, _) = self.locate(b).expect("clamped into grid");
        let mut total = 0.0;
        for j in ja..=jb {
            let (x0, x1) = (self.nodes[j], self.nodes[j + 1]);
            let lo = a.max(x0);
            let hi = b.min(x1);
            if hi <= lo {
                continue;
            }
            let slope = (f[j + 1] - f[j]) / (x1 - x0);
            let at = |x: f64| f[j] + slope * (x - x0);
            total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        }
        total
    }

    fn integrate_shells(&self, f: &[f64], rho: f64) -> f64 {
        let b = rho.min(self.radius);
        let (jb, _) = self.locate(b).expect("clamped into grid");
        let d = self.dim as i32;
        let nd = self.dim as f64;
        let mut total = 0.0;
        for j in 0..=jb {
            let (r0, r1) = (self.nodes[j], self.nodes[j + 1]);
            let hi = b.min(r1);
            if hi <= r0 {
                continue;
            }
            // f(r) = alpha + beta r on this cell
            let beta = (f[j + 1] - f[j]) / (r1 - r0);
            let alpha = f[j] - beta * r0;
            let m0 = (hi.powi(d) - r0.powi(d)) / nd;
            let m1 = (hi.powi(d + 1) - r0.powi(d + 1)) / (nd + 1.0);
            total += alpha * m0 + beta * m1;
        }
        unit_sphere_area(self.dim) * total
    }

    /// Derivative along the grid coordinate: centred differences inside,
    /// second-order one-sided differences at the ends, zero at a radial origin.
    pub fn gradient(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let h = self.h;
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        for i in 1..n - 1 {
            d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
        }
        d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
        d[0] = match self.kind {
            GridKind::Interval => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h),
            GridKind::Radial => Complex64::new(0.0, 0.0),
        };
        d
    }

    /// `w(ρ) = ∫_{Ω ∩ S(x0, ρ)} g conj(∂_ν g) dσ` with `ν` the outward normal
    /// of the ball, both factors linearly interpolated.
    pub fn shell_flux(&self, g: &[Complex64], rho: f64, x0: f64) -> Result<Complex64> {
        self.check_center(x0)?;
        if g.len() != self.len() {
            return Err(LabError::GridMismatch);
        }
        let limit = self.reach(x0);
        if !(rho > 0.0 && rho < limit) {
            return Err(LabError::OutOfRange { rho, limit });
        }
        let dg = self.gradient(g);
        Ok(self.shell_flux_with_gradient(g, &dg, rho, x0))
    }

    pub(crate) fn shell_flux_with_gradient(
        &self,
        g: &[Complex64],
        dg: &[Complex64],
        rho: f64,
        x0: f64,
    ) -> Complex64 {
        let term = |x: f64| -> Complex64 {
            let gv: Complex64 = self.interpolate(g, x);
            let dv: Complex64 = self.interpolate(dg, x);
            gv * dv.conj()
        };
        match self.kind {
            GridKind::Interval => term(x0 + rho) - term(x0 - rho),
            GridKind::Radial => {
                unit_sphere_area(self.dim) * rho.powi(self.dim as i32 - 1) * term(rho)
            }
        }
    }

    /// Discrete `L²` norm with the nodal weights.
    pub fn l2_norm(&self, values: &[Complex64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Discrete `L^q` norm, `q = ∞` allowed.
    pub fn lq_norm(&self, values: &[Complex64], q: f64) -> f64 {
        if q.is_infinite() {
            return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v.norm().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    /// `sqrt(‖g‖² + ‖∇g‖²)` with the nodal gradient.
    pub fn h1_norm(&self, values: &[Complex64]) -> f64 {
        let dg = self.gradient(values);
        (self.l2_norm(values).powi(2) + self.l2_norm(&dg).powi(2)).sqrt()
    }
}

/// Complex values at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Samples `f` at the nodes (signed coordinate on intervals, `r` on radial grids).
    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    /// Same as [`from_fn`](Self::from_fn) but forces the Dirichlet nodes to zero.
    pub fn from_fn_dirichlet(grid: Arc<Grid>, f: impl FnMut(f64) -> Complex64) -> Self {
        let mut field = Self::from_fn(grid, f);
        field.apply_dirichlet();
        field
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn apply_dirichlet(&mut self) {
        for i in 0..self.values.len() {
            if self.grid.is_boundary(i) {
                self.values[i] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn same_grid(&self, other: &ComplexField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2_norm(&self.values)
    }

    pub fn h1_norm(&self) -> f64 {
        self.grid.h1_norm(&self.values)
    }

    pub fn at(&self, x: f64) -> Complex64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn gradient(&self) -> ComplexField {
        Self {
            grid: self.grid.clone(),
            values: self.grid.gradient(&self.values),
        }
    }

    /// `‖self - other‖_{L²}`.
    pub fn distance(&self, other: &ComplexField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(LabError::GridMismatch);
        }
        let diff: Vec<Complex64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(self.grid.l2_norm(&diff))
    }

    /// Writes `coordinate,re,im` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["coordinate", "re", "im"])?;
        for (x, v) in self.grid.nodes().iter().zip(&self.values) {
            out.write_record([
                format!("{x:.16e}"),
                format!("{:.16e}", v.re),
                format!("{:.16e}", v.im),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a field written by [`write_csv`](Self::write_csv); coordinates
    /// must match the grid nodes.
    pub fn read_csv<R: Read>(grid: Arc<Grid>, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut values = Vec::with_capacity(grid.len());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(LabError::Parse(format!("row {i}: expected 3 columns")));
            }
            let num = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LabError::Parse(format!("row {i}, column {k}: {e}")))
            };
            let x = num(0)?;
            if i >= grid.len() || (x - grid.nodes()[i]).abs() > 1e-9 * grid.radius() {
                return Err(LabError::Parse(format!("row {i}: coordinate {x} does not match grid")));
            }
            values.push(Complex64::new(num(1)?, num(2)?));
        }
        Self::new(grid, values)
    }

    pub fn load_csv(grid: Arc<Grid>, path: &Path) -> Result<Self> {
        Self::read_csv(grid, std::fs::File::open(path)?)
    }
}
