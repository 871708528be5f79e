//! Scenario files: a versioned TOML schema with nested sections. Every section
//! has defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use nlslab_core::localization::LocalizationSettings;
use nlslab_core::profile::SolverOptions;
use nlslab_core::{build_grid, validate_params, Complex64, ComplexField, Grid, GridKind, LabError, ModelParams, RawParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;
use thiserror::Error;

pub const SCENARIO_SCHEMA: &str = "nlslab-scenario/1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("unsupported schema `{0}` (expected `{SCENARIO_SCHEMA}`)")]
    Schema(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

impl ConfigError {
    fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            key,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    /// Seed for randomised initial guesses.
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub analysis: LocalizationSettings,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default)]
    pub evolution: EvolutionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub m: f64,
    #[serde(default = "one")]
    pub a_re: f64,
    #[serde(default)]
    pub a_im: f64,
    #[serde(default)]
    pub p_im: f64,
    #[serde(default = "one_usize")]
    pub dim: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridShape {
    Interval,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "interval")]
    pub kind: GridShape,
    pub radius: f64,
    pub nodes: usize,
}

fn interval() -> GridShape {
    GridShape::Interval
}

/// Named forcing profiles `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    /// `amplitude · exp(-|x|²/(2σ²)) · (1 - |x|²/cutoff²)₊³`.
    GaussianBump {
        amplitude: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
    /// `amplitude` on `|x| ≤ radius`, tapering as `(1 - ((|x| - radius)/width)²)₊³`.
    PlateauBump {
        amplitude: f64,
        radius: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
    /// Field file with `coordinate,re,im` rows on the scenario grid. Relative
    /// paths are resolved against the scenario file.
    CustomCsv { path: PathBuf },
}

fn default_sigma() -> f64 {
    0.2
}

fn default_cutoff() -> f64 {
    0.5
}

fn default_width() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    /// Number of seeded random initial guesses for the uniqueness probe; 0 disables it.
    pub uniqueness_guesses: usize,
    /// Size of the random guesses relative to the forcing amplitude.
    pub guess_scale: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            uniqueness_guesses: 0,
            guess_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSpec {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub snapshot_stride: usize,
}

impl Default for EvolutionSpec {
    fn default() -> Self {
        Self {
            t0: 1.0,
            t1: 4.0,
            steps: 800,
            snapshot_stride: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub amplitudes: Vec<f64>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads and validates a scenario file; a custom forcing path is made absolute.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s: Scenario = toml::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        if let ForcingSpec::CustomCsv { path: p } = &mut s.forcing {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&p);
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(ConfigError::Schema(self.schema.clone()));
        }
        let name_ok = !self.name.is_empty()
            && self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !name_ok {
            return Err(ConfigError::invalid("name", "use letters, digits, '-' or '_'"));
        }
        self.params()?;
        if !(self.grid.radius > 0.0 && self.grid.radius.is_finite()) {
            return Err(ConfigError::invalid("grid.radius", "must be positive"));
        }
        if self.grid.kind == GridShape::Radial && self.model.dim < 2 {
            return Err(ConfigError::invalid("grid.kind", "radial grids need model.dim >= 2"));
        }
        if self.grid.kind == GridShape::Interval && self.model.dim != 1 {
            return Err(ConfigError::invalid("grid.kind", "interval grids need model.dim = 1"));
        }
        self.grid().map_err(|e| ConfigError::invalid("grid.nodes", e.to_string()))?;
        self.check_forcing()?;
        let e = &self.evolution;
        if !(e.t0 >= 0.25) {
            return Err(ConfigError::invalid("evolution.t0", "must be at least 0.25"));
        }
        if !(e.t1 > e.t0) {
            return Err(ConfigError::invalid("evolution.t1", "must exceed evolution.t0"));
        }
        if e.steps == 0 {
            return Err(ConfigError::invalid("evolution.steps", "must be positive"));
        }
        let a = &self.analysis;
        if !(a.rho0 > 0.0 && a.rho1 > a.rho0) {
            return Err(ConfigError::invalid("analysis.rho1", "need 0 < rho0 < rho1"));
        }
        if !(a.eps > 0.0 && a.c_cal > 0.0 && a.eps_star > 0.0) {
            return Err(ConfigError::invalid("analysis.eps", "eps, c_cal and eps_star must be positive"));
        }
        if !(a.threshold > 0.0 && a.threshold < 1.0) {
            return Err(ConfigError::invalid("analysis.threshold", "must lie in (0, 1)"));
        }
        if a.n_radii < 2 {
            return Err(ConfigError::invalid("analysis.n_radii", "need at least 2 radii"));
        }
        if a.identity_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(ConfigError::invalid("analysis.identity_fractions", "fractions must lie in (0, 1]"));
        }
        if let Some(sw) = &self.sweep {
            if sw.amplitudes.is_empty() {
                return Err(ConfigError::invalid("sweep.amplitudes", "list is empty"));
            }
            if sw.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return Err(ConfigError::invalid("sweep.amplitudes", "amplitudes must be finite and non-negative"));
            }
            if matches!(self.forcing, ForcingSpec::Zero | ForcingSpec::CustomCsv { .. }) {
                return Err(ConfigError::invalid("forcing.kind", "sweeps need a named bump forcing"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        let raw = RawParams {
            m: self.model.m,
            a: Complex64::new(self.model.a_re, self.model.a_im),
            p_im: self.model.p_im,
            dim: self.model.dim,
            radius: self.grid.radius,
        };
        validate_params(&raw).map_err(|e| match e {
            LabError::InvalidExponent(_) => ConfigError::invalid("model.m", e.to_string()),
            LabError::InadmissibleCoefficient(_) => ConfigError::invalid("model.a_re/model.a_im", e.to_string()),
            LabError::InvalidDomain(_) => ConfigError::invalid("model.dim", e.to_string()),
            other => ConfigError::invalid("model", other.to_string()),
        })
    }

    pub fn grid(&self) -> nlslab_core::Result<Arc<Grid>> {
        let kind = match self.grid.kind {
            GridShape::Interval => GridKind::Interval,
            GridShape::Radial => GridKind::Radial,
        };
        build_grid(kind, self.model.dim, self.grid.radius, self.grid.nodes)
    }

    fn check_forcing(&self) -> Result<(), ConfigError> {
        let r = self.grid.radius;
        match &self.forcing {
            ForcingSpec::Zero => {}
            ForcingSpec::GaussianBump {
                amplitude,
                sigma,
                cutoff,
            } => {
                if !(amplitude.is_finite() && *sigma > 0.0) {
                    return Err(ConfigError::invalid("forcing.sigma", "need finite amplitude and sigma > 0"));
                }
                if !(*cutoff > 0.0 && *cutoff < r) {
                    return Err(ConfigError::invalid("forcing.cutoff", "support must lie strictly inside the grid"));
                }
            }
            ForcingSpec::PlateauBump {
                amplitude,
                radius,
                width,
            } => {
                if !(amplitude.is_finite() && *radius >= 0.0 && *width > 0.0) {
                    return Err(ConfigError::invalid("forcing.width", "need finite amplitude, radius >= 0, width > 0"));
                }
                if !(radius + width < r) {
                    return Err(ConfigError::invalid("forcing.radius", "support must lie strictly inside the grid"));
                }
            }
            ForcingSpec::CustomCsv { path } => {
                if !path.is_file() {
                    return Err(ConfigError::invalid("forcing.path", format!("{} does not exist", path.display())));
                }
                let f = self.forcing_field().map_err(|e| ConfigError::invalid("forcing.path", e.to_string()))?;
                let boundary = (0..f.values().len())
                    .filter(|&i| f.grid().is_boundary(i))
                    .any(|i| f.values()[i] != Complex64::new(0.0, 0.0));
                if boundary {
                    return Err(ConfigError::invalid("forcing.path", "forcing must vanish on the boundary"));
                }
            }
        }
        Ok(())
    }

    /// Forcing profile `F` sampled on the scenario grid.
    pub fn forcing_field(&self) -> nlslab_core::Result<ComplexField> {
        let grid = self.grid()?;
        Ok(match &self.forcing {
            ForcingSpec::Zero => ComplexField::zeros(grid),
            ForcingSpec::GaussianBump {
                amplitude,
                sigma,
                cutoff,
            } => ComplexField::from_fn(grid, |x| {
                let taper = (1.0 - x * x / (cutoff * cutoff)).max(0.0).powi(3);
                Complex64::new(amplitude * (-x * x / (2.0 * sigma * sigma)).exp() * taper, 0.0)
            }),
            ForcingSpec::PlateauBump {
                amplitude,
                radius,
                width,
            } => ComplexField::from_fn(grid, |x| {
                let d = (x.abs() - radius).max(0.0) / width;
                Complex64::new(amplitude * (1.0 - d * d).max(0.0).powi(3), 0.0)
            }),
            ForcingSpec::CustomCsv { path } => ComplexField::load_csv(grid, path)?,
        })
    }

    /// Copy with the forcing amplitude replaced; `None` for forcings without one.
    pub fn with_amplitude(&self, value: f64) -> Option<Self> {
        let mut s = self.clone();
        match &mut s.forcing {
            ForcingSpec::GaussianBump { amplitude, .. } | ForcingSpec::PlateauBump { amplitude, .. } => *amplitude = value,
            _ => return None,
        }
        s.sweep = None;
        Some(s)
    }

    pub fn forcing_amplitude(&self) -> f64 {
        match &self.forcing {
            ForcingSpec::GaussianBump { amplitude, .. } | ForcingSpec::PlateauBump { amplitude, .. } => *amplitude,
            _ => 1.0,
        }
    }

    /// Canonical TOML form of the effective scenario.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// First 12 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..12].to_string()
    }

    /// `<name>-<hash>` below `root`.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        root.join(format!("{}-{}", self.name, self.content_hash()))
    }
}
