//! Scalar model data: the sublinear exponent, the complex coefficients of the
//! forced equation, and every coefficient or exponent derived from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Relative tolerance used for closed-form consistency checks.
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// Unvalidated parameter record as supplied by a caller or a config file.
///
/// Only the imaginary part of the self-similarity exponent is accepted; the
/// real part is fixed by `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub m: f64,
    pub a: Complex64,
    pub p_im: f64,
    pub dim: usize,
    pub radius: f64,
}

/// Validated model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    m: f64,
    a: Complex64,
    p: Complex64,
    dim: usize,
    radius: f64,
}

impl ModelParams {
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    /// Self-similarity exponent `p` with `Re(p) = 2/(1-m)`.
    pub fn p(&self) -> Complex64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Copy with `a = 0`. That value is outside the admissible set; it is only
    /// meant for linear reference runs.
    pub fn without_nonlinearity(&self) -> Self {
        Self {
            a: Complex64::new(0.0, 0.0),
            ..*self
        }
    }

    /// Same parameters on a different domain radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        validate_params(&RawParams {
            m: self.m,
            a: self.a,
            p_im: self.p.im,
            dim: self.dim,
            radius,
        })
    }
}

/// Checks the admissibility conditions on `(m, a, N, R)` and fixes `Re(p)`.
pub fn validate_params(raw: &RawParams) -> Result<ModelParams> {
    if !(raw.m > 0.0 && raw.m < 1.0) {
        return Err(LabError::InvalidExponent(raw.m));
    }
    check_sublinear_coefficient(raw.a)?;
    if !raw.p_im.is_finite() {
        return Err(LabError::InadmissibleCoefficient(format!(
            "Im(p) must be finite (got {})",
            raw.p_im
        )));
    }
    if raw.dim < 1 {
        return Err(LabError::InvalidDomain("dimension N must be at least 1".into()));
    }
    if !(raw.radius > 0.0 && raw.radius.is_finite()) {
        return Err(LabError::InvalidDomain(format!(
            "radius must be positive (got {})",
            raw.radius
        )));
    }
    Ok(ModelParams {
        m: raw.m,
        a: raw.a,
        p: Complex64::new(2.0 / (1.0 - raw.m), raw.p_im),
        dim: raw.dim,
        radius: raw.radius,
    })
}

/// `Im(a) <= 0`, and `Im(a) < 0` whenever `Re(a) <= 0`.
pub fn check_sublinear_coefficient(a: Complex64) -> Result<()> {
    if !(a.re.is_finite() && a.im.is_finite()) {
        return Err(LabError::InadmissibleCoefficient(format!("a = {a} is not finite")));
    }
    if a.im > 0.0 {
        return Err(LabError::InadmissibleCoefficient(format!(
            "Im(a) = {} must be non-positive",
            a.im
        )));
    }
    if a.re <= 0.0 && a.im >= 0.0 {
        return Err(LabError::InadmissibleCoefficient(format!(
            "Re(a) = {} <= 0 requires Im(a) < 0 (got {})",
            a.re, a.im
        )));
    }
    Ok(())
}

/// Coefficients of the gauge-transformed stationary equation
/// `-Δg + a|g|^{m-1}g + b g + c|x|² g = G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    pub b: Complex64,
    pub c: f64,
    /// Gauge parameter `c_g` of the phase `exp(-i c_g |x|²/4)`; `1/2` is canonical.
    pub gauge: f64,
}

pub const CANONICAL_GAUGE: f64 = 0.5;

impl DerivedCoefficients {
    /// Overrides `(b, c)`, keeping the canonical gauge. Only `Im(b) < 0` is enforced.
    pub fn with_overrides(b: Complex64, c: f64) -> Result<Self> {
        if !(b.im < 0.0) {
            return Err(LabError::InadmissibleCoefficient(format!(
                "Im(b) = {} must be negative",
                b.im
            )));
        }
        Ok(Self {
            b,
            c,
            gauge: CANONICAL_GAUGE,
        })
    }
}

/// `b = -i(N + 2p)/4`, `c = -1/16`.
pub fn derive_coefficients(params: &ModelParams) -> DerivedCoefficients {
    let n = params.dim as f64;
    let b = -Complex64::i() * (n + 2.0 * params.p) / 4.0;
    DerivedCoefficients {
        b,
        c: -1.0 / 16.0,
        gauge: CANONICAL_GAUGE,
    }
}

/// Closed form of `Im(b)` for the canonical gauge.
pub fn im_b_closed_form(params: &ModelParams) -> f64 {
    let n = params.dim as f64;
    let m = params.m;
    -(n * (1.0 - m) + 4.0) / (4.0 * (1.0 - m))
}

/// Exponents appearing in the support-radius estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    pub m: f64,
    pub k: f64,
    pub nu: f64,
    /// Growth exponent of the forcing-decay criterion, `(2(1+m)+N(1-m))/(1-m)`.
    pub p_growth: f64,
}

impl ExponentSet {
    /// Open lower end of the τ-range.
    pub fn tau_min(&self) -> f64 {
        (self.m + 1.0) / 2.0
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if tau > self.tau_min() && tau <= 1.0 {
            Ok(())
        } else {
            Err(LabError::DomainError(format!(
                "tau = {tau} outside (({}), 1]",
                self.tau_min()
            )))
        }
    }

    pub fn gamma(&self, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        Ok((2.0 * tau - (1.0 + self.m)) / self.k)
    }

    pub fn mu(&self, tau: f64) -> Result<f64> {
        self.check_tau(tau)?;
        Ok(2.0 * (1.0 - tau) / self.k)
    }

    pub fn eta(&self, tau: f64) -> Result<f64> {
        Ok((1.0 - self.m) / (1.0 + self.m) - self.gamma(tau)?)
    }
}

pub fn exponent_set(params: &ModelParams) -> ExponentSet {
    let m = params.m;
    let n = params.dim as f64;
    let k = 2.0 * (1.0 + m) + n * (1.0 - m);
    ExponentSet {
        m,
        k,
        nu: k / (m + 1.0),
        p_growth: k / (1.0 - m),
    }
}

/// Largest support radius `R₀` for which compactly supported profiles are
/// unique: `R₀² = 4 Im(p) + 2 sqrt(4 Im(p)² + 2)`.
pub fn uniqueness_radius(params: &ModelParams) -> f64 {
    uniqueness_radius_for(params.p.im)
}

pub fn uniqueness_radius_for(p_im: f64) -> f64 {
    let root = 2.0 * (4.0 * p_im * p_im + 2.0).sqrt();
    // the two terms nearly cancel for large negative Im(p)
    let r2 = if p_im >= 0.0 {
        4.0 * p_im + root
    } else {
        8.0 / (root - 4.0 * p_im)
    };
    r2.sqrt()
}
