//! Energy-method diagnostics on solved profiles: cumulative ball energies,
//! the local energy inequality and its constants, the integral identities
//! obtained by pairing the equation with `conj(g)`, the vanishing-radius
//! estimate, the forcing-decay margin and numerical support checks.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{ComplexField, Grid};
use crate::model::{check_sublinear_coefficient, exponent_set, DerivedCoefficients, ModelParams};

/// Ball-restricted quantities of a field pair `(g, G)` on a list of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub center: f64,
    pub radii: Vec<f64>,
    /// `‖∇g‖²` over the ball.
    pub energy: Vec<f64>,
    /// `‖g‖^{m+1}_{L^{m+1}}` over the ball.
    pub bmass: Vec<f64>,
    pub l2mass: Vec<f64>,
    /// `‖|x| g‖²` over the ball.
    pub wmass: Vec<f64>,
    /// Modulus of the boundary flux `∮ g conj(∂_ν g)`.
    pub flux: Vec<f64>,
    /// `∫ |G g|` over the ball.
    pub jterm: Vec<f64>,
    /// `‖G‖²` over the ball.
    pub gball: Vec<f64>,
}

struct BallIntegrands {
    grad_sq: Vec<f64>,
    bmass: Vec<f64>,
    l2: Vec<f64>,
    weighted: Vec<f64>,
    gbar_g: Vec<Complex64>,
    dg: Vec<Complex64>,
}

impl BallIntegrands {
    fn new(g: &ComplexField, rhs: &ComplexField, m: f64) -> Self {
        let grid = g.grid();
        let dg = grid.gradient(g.values());
        let gv = g.values();
        Self {
            grad_sq: dg.iter().map(|d| d.norm_sqr()).collect(),
            bmass: gv.iter().map(|v| v.norm().powf(m + 1.0)).collect(),
            l2: gv.iter().map(|v| v.norm_sqr()).collect(),
            weighted: gv
                .iter()
                .zip(grid.nodes())
                .map(|(v, x)| x * x * v.norm_sqr())
                .collect(),
            gbar_g: gv.iter().zip(rhs.values()).map(|(v, r)| r * v.conj()).collect(),
            dg,
        }
    }
}

/// Flux `∮ g conj(∂_ν g)` over the sphere `S(x0, ρ)`; zero once the sphere
/// leaves the domain, where `g` vanishes.
fn flux_at(grid: &Grid, g: &[Complex64], dg: &[Complex64], rho: f64, x0: f64) -> Complex64 {
    if rho <= 0.0 || rho >= grid.reach(x0) {
        Complex64::new(0.0, 0.0)
    } else {
        grid.shell_flux_with_gradient(g, dg, rho, x0)
    }
}

/// Energy profile on `n_radii` equispaced radii in `[0, R + |x0|]`.
pub fn energy_profile(g: &ComplexField, rhs: &ComplexField, m: f64, x0: f64, n_radii: usize) -> Result<EnergyProfile> {
    if n_radii < 2 {
        return Err(LabError::DomainError("need at least two radii".into()));
    }
    let reach = g.grid().reach(x0);
    let radii: Vec<f64> = (0..n_radii)
        .map(|j| reach * j as f64 / (n_radii - 1) as f64)
        .collect();
    energy_profile_at(g, rhs, m, x0, &radii)
}

pub fn energy_profile_at(g: &ComplexField, rhs: &ComplexField, m: f64, x0: f64, radii: &[f64]) -> Result<EnergyProfile> {
    if !g.same_grid(rhs) {
        return Err(LabError::GridMismatch);
    }
    let grid = g.grid();
    let it = BallIntegrands::new(g, rhs, m);
    let jt: Vec<f64> = it.gbar_g.iter().map(|v| v.norm()).collect();
    let gsq: Vec<f64> = rhs.values().iter().map(|v| v.norm_sqr()).collect();
    let mut p = EnergyProfile {
        center: x0,
        radii: radii.to_vec(),
        energy: Vec::with_capacity(radii.len()),
        bmass: Vec::with_capacity(radii.len()),
        l2mass: Vec::with_capacity(radii.len()),
        wmass: Vec::with_capacity(radii.len()),
        flux: Vec::with_capacity(radii.len()),
        jterm: Vec::with_capacity(radii.len()),
        gball: Vec::with_capacity(radii.len()),
    };
    for &rho in radii {
        p.energy.push(grid.integrate_ball(&it.grad_sq, rho, x0)?);
        p.bmass.push(grid.integrate_ball(&it.bmass, rho, x0)?);
        p.l2mass.push(grid.integrate_ball(&it.l2, rho, x0)?);
        p.wmass.push(grid.integrate_ball(&it.weighted, rho, x0)?);
        p.flux.push(flux_at(grid, g.values(), &it.dg, rho, x0).norm());
        p.jterm.push(grid.integrate_ball(&jt, rho, x0)?);
        p.gball.push(grid.integrate_ball(&gsq, rho, x0)?);
    }
    Ok(p)
}

impl EnergyProfile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serialises")
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rho", "E", "bmass", "l2mass", "wmass", "I", "Jterm", "Gball"])?;
        for j in 0..self.radii.len() {
            let row = [
                self.radii[j],
                self.energy[j],
                self.bmass[j],
                self.l2mass[j],
                self.wmass[j],
                self.flux[j],
                self.jterm[j],
                self.gball[j],
            ];
            out.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Linear interpolation of a component at `rho`, clamped to the sampled range.
    fn sample(&self, values: &[f64], rho: f64) -> f64 {
        let r = &self.radii;
        if rho <= r[0] {
            return values[0];
        }
        for j in 1..r.len() {
            if rho <= r[j] {
                let s = (rho - r[j - 1]) / (r[j] - r[j - 1]);
                return values[j - 1] * (1.0 - s) + values[j] * s;
            }
        }
        values[values.len() - 1]
    }
}

/// Constants of the local energy inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityConstants {
    #[serde(rename = "A")]
    pub a_const: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl InequalityConstants {
    /// `A₁ ≥ 1` when `Re(a) ≤ 0`, and `A₂ - R²|Re c| ≥ 1`.
    pub fn satisfies_constraints(&self, a: Complex64, c: f64, radius: f64) -> bool {
        let first = a.re > 0.0 || self.a1 >= 1.0 - 1e-12;
        first && self.a2 - radius * radius * c.abs() >= 1.0 - 1e-12
    }
}

pub fn inequality_constants(a: Complex64, b: Complex64, c: f64, radius: f64) -> Result<InequalityConstants> {
    check_sublinear_coefficient(a)?;
    if !(b.im < 0.0) {
        return Err(LabError::InadmissibleCoefficient(format!("Im(b) = {} must be negative", b.im)));
    }
    let mut a_const = (1.0 + b.re.abs() + radius * radius * c.abs()) / b.im.abs();
    a_const = a_const.max(2.0);
    if a.re <= 0.0 {
        a_const = a_const.max((1.0 + a.re.abs()) / a.im.abs());
    }
    let a1 = if a.re > 0.0 { a.re } else { a_const * a.im.abs() - a.re.abs() };
    let a2 = a_const * b.im.abs() - b.re.abs();
    Ok(InequalityConstants {
        a_const,
        a1,
        a2,
        l: a1.min(1.0),
        m: 2.0 * a_const,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    /// `M (I + J) - (E + L bmass + L l2mass)` per radius.
    pub margins: Vec<f64>,
    pub tol_disc: f64,
    pub holds: bool,
}

/// Evaluates the energy inequality on every sampled radius. The slack is
/// `10 h²` times the largest term.
pub fn check_energy_inequality(profile: &EnergyProfile, l: f64, m: f64, spacing: f64) -> InequalityCheck {
    let mut scale: f64 = 0.0;
    let margins: Vec<f64> = (0..profile.radii.len())
        .map(|j| {
            let lhs = profile.energy[j] + l * profile.bmass[j] + l * profile.l2mass[j];
            let rhs = m * (profile.flux[j] + profile.jterm[j]);
            scale = scale.max(lhs).max(rhs);
            rhs - lhs
        })
        .collect();
    let tol_disc = 10.0 * spacing * spacing * scale;
    let holds = margins.iter().all(|&v| v >= -tol_disc);
    InequalityCheck { margins, tol_disc, holds }
}

/// Defects of the two integral identities on one ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDefect {
    pub rho: f64,
    pub real: f64,
    pub imag: f64,
}

/// Pairing the equation with `conj(g)` over `B(x0, ρ)` gives, with
/// `w = ∮ g conj(∂_ν g)`,
///
/// ```text
/// ‖∇g‖² + Re(a) bmass + Re(b) l2 + Re(c) wmass = Re(w) + Re ∫ G conj(g)
///          Im(a) bmass + Im(b) l2 + Im(c) wmass = -Im(w) + Im ∫ G conj(g)
/// ```
///
/// Returns the absolute defects of both lines for every radius.
pub fn check_identities(
    g: &ComplexField,
    rhs: &ComplexField,
    params: &ModelParams,
    coeffs: &DerivedCoefficients,
    x0: f64,
    radii: &[f64],
) -> Result<Vec<IdentityDefect>> {
    if !g.same_grid(rhs) {
        return Err(LabError::GridMismatch);
    }
    let grid = g.grid();
    let it = BallIntegrands::new(g, rhs, params.m());
    let (a, b, c) = (params.a(), coeffs.b, coeffs.c);
    radii
        .iter()
        .map(|&rho| {
            let e = grid.integrate_ball(&it.grad_sq, rho, x0)?;
            let bm = grid.integrate_ball(&it.bmass, rho, x0)?;
            let l2 = grid.integrate_ball(&it.l2, rho, x0)?;
            let wm = grid.integrate_ball(&it.weighted, rho, x0)?;
            let pair = grid.integrate_ball_complex(&it.gbar_g, rho, x0)?;
            let w = flux_at(grid, g.values(), &it.dg, rho, x0);
            let real = e + a.re * bm + b.re * l2 + c * wm - w.re - pair.re;
            let imag = a.im * bm + b.im * l2 + w.im - pair.im;
            Ok(IdentityDefect {
                rho,
                real: real.abs(),
                imag: imag.abs(),
            })
        })
        .collect()
}

/// Number of τ samples in the minimisation.
pub const TAU_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoMax {
    pub rho_max: f64,
    pub tau_star: f64,
}

/// Vanishing radius from `E(ρ₀)` and `b(ρ₀)`:
///
/// ```text
/// ρ_max^ν = (ρ₀^ν - C M² max{1, 1/L²} max{ρ₀^{ν-1}, 1}
///            · min_τ E^{γ(τ)} max{b^{μ(τ)}, b^{η(τ)}} / (2τ - (1+m)))₊
/// ```
pub fn rho_max_from(
    energy: f64,
    bmass: f64,
    rho0: f64,
    l: f64,
    m_const: f64,
    c_cal: f64,
    params: &ModelParams,
) -> Result<RhoMax> {
    if !(rho0 > 0.0) {
        return Err(LabError::DomainError(format!("rho0 = {rho0} must be positive")));
    }
    if !(l > 0.0 && m_const > 0.0 && c_cal > 0.0) {
        return Err(LabError::DomainError("L, M and the calibration constant must be positive".into()));
    }
    if !(energy >= 0.0 && bmass >= 0.0) {
        return Err(LabError::DomainError("ball energies must be non-negative".into()));
    }
    let ex = exponent_set(params);
    let m = params.m();
    let tau_min = ex.tau_min();
    let step = (1.0 - tau_min) / TAU_SAMPLES as f64;
    let (mut best, mut tau_star) = (f64::INFINITY, 1.0);
    for j in 0..TAU_SAMPLES {
        let tau = if j + 1 == TAU_SAMPLES { 1.0 } else { tau_min + (j + 1) as f64 * step };
        let (gamma, mu, eta) = (ex.gamma(tau)?, ex.mu(tau)?, ex.eta(tau)?);
        let bpow = if bmass == 0.0 { 0.0 } else { bmass.powf(mu).max(bmass.powf(eta)) };
        let value = energy.powf(gamma) * bpow / (2.0 * tau - (1.0 + m));
        if value < best {
            best = value;
            tau_star = tau;
        }
    }
    let nu = ex.nu;
    if best == 0.0 {
        return Ok(RhoMax { rho_max: rho0, tau_star });
    }
    let bracket = rho0.powf(nu)
        - c_cal * m_const * m_const * (1.0 / (l * l)).max(1.0) * rho0.powf(nu - 1.0).max(1.0) * best;
    Ok(RhoMax {
        rho_max: bracket.max(0.0).powf(1.0 / nu),
        tau_star,
    })
}

/// [`rho_max_from`] with `E(ρ₀)` and `b(ρ₀)` read off the profile.
pub fn rho_max(
    profile: &EnergyProfile,
    rho0: f64,
    consts: &InequalityConstants,
    c_cal: f64,
    params: &ModelParams,
) -> Result<RhoMax> {
    let e = profile.sample(&profile.energy, rho0);
    let b = profile.sample(&profile.bmass, rho0);
    rho_max_from(e, b, rho0, consts.l, consts.m, c_cal, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingDecayMargin {
    /// `min_{ρ₀<ρ<ρ₁} ε⋆ (ρ-ρ₀)^p - ‖G‖²_{B(x0,ρ)}`.
    pub margin: f64,
    /// Whether `G` vanishes on `B(x0, ρ₀)`.
    pub vanishes_inside: bool,
}

/// Margin of the forcing-decay condition `‖G‖²_{B(x0,ρ)} ≤ ε⋆ ((ρ-ρ₀)₊)^p`
/// over the sampled radii in `(ρ₀, ρ₁)`, with `p` the growth exponent.
pub fn forcing_decay_margin(profile: &EnergyProfile, rho0: f64, rho1: f64, eps_star: f64, params: &ModelParams) -> Result<ForcingDecayMargin> {
    if !(rho0 > 0.0 && rho1 > rho0) {
        return Err(LabError::DomainError(format!("need 0 < rho0 < rho1 (got {rho0}, {rho1})")));
    }
    if !(eps_star > 0.0) {
        return Err(LabError::DomainError(format!("eps_star = {eps_star} must be positive")));
    }
    let p = exponent_set(params).p_growth;
    let mut margin = f64::INFINITY;
    for (j, &rho) in profile.radii.iter().enumerate() {
        if rho > rho0 && rho < rho1 {
            margin = margin.min(eps_star * (rho - rho0).powf(p) - profile.gball[j]);
        }
    }
    if margin == f64::INFINITY {
        return Err(LabError::DomainError("no sampled radius between rho0 and rho1".into()));
    }
    Ok(ForcingDecayMargin {
        margin,
        vanishes_inside: profile.sample(&profile.gball, rho0) == 0.0,
    })
}

/// Default relative threshold for numerical supports.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

fn support_mask(field: &ComplexField, threshold_rel: f64) -> Vec<bool> {
    let cut = threshold_rel * field.max_abs();
    field.values().iter().map(|v| v.norm() > cut).collect()
}

/// Largest `|x|` with `|field| > threshold_rel · max|field|`; `0` for the zero field.
pub fn support_radius(field: &ComplexField, threshold_rel: f64) -> f64 {
    if field.is_zero() {
        return 0.0;
    }
    let grid = field.grid();
    support_mask(field, threshold_rel)
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| grid.abs_coord(i))
        .fold(0.0, f64::max)
}

/// Closed intervals covering the numerical support of `field`, one per run of
/// consecutive support nodes.
pub fn support_intervals(field: &ComplexField, threshold_rel: f64) -> Vec<(f64, f64)> {
    if field.is_zero() {
        return Vec::new();
    }
    let x = field.grid().nodes();
    let mask = support_mask(field, threshold_rel);
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &s) in mask.iter().enumerate() {
        match (s, start) {
            (true, None) => start = Some(i),
            (false, Some(j)) => {
                runs.push((x[j], x[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(j) = start {
        runs.push((x[j], x[x.len() - 1]));
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub contained: bool,
    /// Largest distance from a support node of `U` to the dilated set;
    /// `None` when the dilated set is empty but `U` is not zero.
    pub worst_distance: Option<f64>,
    /// Dilated forcing support, as closed intervals in the grid coordinate.
    pub dilated: Vec<(f64, f64)>,
}

/// Whether the numerical support of `U` lies in the `ε`-neighbourhood of the
/// numerical support of `F`.
pub fn dilated_support_containment(u: &ComplexField, forcing: &ComplexField, eps: f64, threshold_rel: f64) -> Result<Containment> {
    if !u.same_grid(forcing) {
        return Err(LabError::GridMismatch);
    }
    if !(eps > 0.0) {
        return Err(LabError::DomainError(format!("eps = {eps} must be positive")));
    }
    let radial = u.grid().kind() == crate::grid::GridKind::Radial;
    let dilated: Vec<(f64, f64)> = support_intervals(forcing, threshold_rel)
        .into_iter()
        .map(|(lo, hi)| {
            let lo = lo - eps;
            (if radial { lo.max(0.0) } else { lo }, hi + eps)
        })
        .collect();
    if u.is_zero() {
        return Ok(Containment {
            contained: true,
            worst_distance: Some(0.0),
            dilated,
        });
    }
    if dilated.is_empty() {
        return Ok(Containment {
            contained: false,
            worst_distance: None,
            dilated,
        });
    }
    let x = u.grid().nodes();
    let worst = support_mask(u, threshold_rel)
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| {
            dilated
                .iter()
                .map(|&(lo, hi)| (lo - x[i]).max(x[i] - hi).max(0.0))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    Ok(Containment {
        contained: worst == 0.0,
        worst_distance: Some(worst),
        dilated,
    })
}

/// Inputs of the localisation analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizationSettings {
    /// Ball centre for the vanishing-radius and forcing-decay checks.
    pub x0: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub eps: f64,
    pub c_cal: f64,
    pub eps_star: f64,
    pub threshold: f64,
    pub n_radii: usize,
    /// Radii of the identity checks, as fractions of the domain radius.
    pub identity_fractions: Vec<f64>,
}

impl Default for LocalizationSettings {
    fn default() -> Self {
        Self {
            x0: 1.0,
            rho0: 0.5,
            rho1: 1.0,
            eps: 0.5,
            c_cal: 1.0,
            eps_star: 1.0,
            threshold: SUPPORT_THRESHOLD,
            n_radii: 201,
            identity_fractions: vec![0.25, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub constants: InequalityConstants,
    pub rho_max: f64,
    pub tau_star: f64,
    pub support_radius: f64,
    pub support_contained: bool,
    pub support_worst_distance: Option<f64>,
    pub identity_residuals: Vec<IdentityDefect>,
    pub forcing_decay_margin: f64,
    pub forcing_vanishes_inside: bool,
    pub inequality_min_margin: f64,
    pub inequality_tol: f64,
    pub inequality_holds: bool,
}

/// Full analysis of a solved profile `g` with right-hand side `G`, physical
/// profile `U` and forcing `F`.
pub fn analyze(
    g: &ComplexField,
    rhs: &ComplexField,
    u: &ComplexField,
    forcing: &ComplexField,
    params: &ModelParams,
    coeffs: &DerivedCoefficients,
    settings: &LocalizationSettings,
) -> Result<(LocalizationReport, EnergyProfile)> {
    let grid = g.grid();
    let consts = inequality_constants(params.a(), coeffs.b, coeffs.c, grid.radius())?;
    let centred = energy_profile(g, rhs, params.m(), 0.0, settings.n_radii)?;
    let ineq = check_energy_inequality(&centred, consts.l, consts.m, grid.spacing());
    let radii: Vec<f64> = settings
        .identity_fractions
        .iter()
        .map(|f| f * grid.radius())
        .collect();
    let identities = check_identities(g, rhs, params, coeffs, 0.0, &radii)?;
    let shifted = energy_profile(g, rhs, params.m(), settings.x0, settings.n_radii)?;
    let rm = rho_max(&shifted, settings.rho0, &consts, settings.c_cal, params)?;
    let decay = forcing_decay_margin(&shifted, settings.rho0, settings.rho1, settings.eps_star, params)?;
    let contain = dilated_support_containment(u, forcing, settings.eps, settings.threshold)?;
    let report = LocalizationReport {
        constants: consts,
        rho_max: rm.rho_max,
        tau_star: rm.tau_star,
        support_radius: support_radius(g, settings.threshold),
        support_contained: contain.contained,
        support_worst_distance: contain.worst_distance,
        identity_residuals: identities,
        forcing_decay_margin: decay.margin,
        forcing_vanishes_inside: decay.vanishes_inside,
        inequality_min_margin: ineq.margins.iter().copied().fold(f64::INFINITY, f64::min),
        inequality_tol: ineq.tol_disc,
        inequality_holds: ineq.holds,
    };
    Ok((report, centred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use crate::model::{validate_params, RawParams};

    fn params() -> ModelParams {
        validate_params(&RawParams {
            m: 0.5,
            a: Complex64::new(1.0, 0.0),
            p_im: 0.0,
            dim: 1,
            radius: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn inequality_constants_example() {
        let c = inequality_constants(Complex64::new(1.0, 0.0), Complex64::new(0.0, -2.25), -1.0 / 16.0, 2.0).unwrap();
        assert_eq!(c.a_const, 2.0);
        assert_eq!(c.l, 1.0);
        assert_eq!(c.m, 4.0);
        assert!((c.a2 - 4.5).abs() < 1e-15);
        assert!(c.satisfies_constraints(Complex64::new(1.0, 0.0), -1.0 / 16.0, 2.0));

        let a = Complex64::new(-1.0, -1.0);
        let c = inequality_constants(a, Complex64::new(0.0, -2.25), -1.0 / 16.0, 2.0).unwrap();
        assert!(c.a1 >= 1.0);
        assert!(c.satisfies_constraints(a, -1.0 / 16.0, 2.0));

        assert!(matches!(
            inequality_constants(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 0.0, 1.0),
            Err(LabError::InadmissibleCoefficient(_))
        ));
    }

    #[test]
    fn rho_max_limits() {
        let p = params();
        let r = rho_max_from(0.0, 0.0, 0.7, 1.0, 4.0, 1.0, &p).unwrap();
        assert_eq!(r.rho_max, 0.7);
        let r = rho_max_from(2.0, 0.0, 0.7, 1.0, 4.0, 1.0, &p).unwrap();
        assert_eq!(r.rho_max, 0.7);
        let r = rho_max_from(1e6, 1e6, 0.7, 1.0, 4.0, 1.0, &p).unwrap();
        assert_eq!(r.rho_max, 0.0);
        assert!(rho_max_from(1.0, 1.0, 0.0, 1.0, 4.0, 1.0, &p).is_err());
    }

    #[test]
    fn zero_field_profile() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 101).unwrap();
        let z = ComplexField::zeros(grid.clone());
        let rhs = ComplexField::from_fn_dirichlet(grid, |x| Complex64::new((1.0 - x * x).max(0.0), 0.0));
        let p = energy_profile(&z, &rhs, 0.5, 0.0, 11).unwrap();
        assert!(p.energy.iter().chain(&p.bmass).chain(&p.flux).all(|&v| v == 0.0));
        assert!(p.gball.last().unwrap() > &0.0);
        let chk = check_energy_inequality(&p, 1.0, 4.0, 0.04);
        assert!(chk.margins.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn support_of_tent() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 401).unwrap();
        let f = ComplexField::from_fn(grid.clone(), |x| Complex64::new((1.0 - x * x).max(0.0), 0.0));
        let r = support_radius(&f, 1e-6);
        assert!((r - 1.0).abs() <= grid.spacing());
        assert_eq!(support_radius(&ComplexField::zeros(grid), 1e-6), 0.0);
    }

    #[test]
    fn dilation_of_interval_support() {
        let grid = build_grid(GridKind::Interval, 1, 2.0, 401).unwrap();
        let f = ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new(if x.abs() <= 0.5 + 1e-12 { 1.0 } else { 0.0 }, 0.0)
        });
        let u = ComplexField::from_fn(grid, |x| Complex64::new((0.75 - x.abs()).max(0.0), 0.0));
        let c = dilated_support_containment(&u, &f, 0.25, 1e-6).unwrap();
        assert_eq!(c.dilated.len(), 1);
        assert!((c.dilated[0].0 + 0.75).abs() < 1e-12 && (c.dilated[0].1 - 0.75).abs() < 1e-12);
        assert!(c.contained);
    }
}
