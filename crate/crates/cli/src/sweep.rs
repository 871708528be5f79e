//! Amplitude sweeps: one solve-and-localize run per forcing amplitude on a
//! bounded worker pool, aggregated into a CSV table and a JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Scenario};
use crate::pipeline::{execute, PipelineError, RunStatus, Stage};

pub const SWEEP_SCHEMA: &str = "nlslab-sweep/1";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    /// `‖G‖_{L²}`.
    pub rhs_l2: f64,
    /// `‖g‖_{H¹}`.
    pub g_h1: f64,
    pub support_radius: f64,
    pub rho_max: f64,
    /// `‖g‖_{H¹} / ((R² + 1)‖G‖_{L²})`.
    pub h1_ratio: f64,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub name: String,
    pub config_hash: String,
    pub rows: Vec<SweepRow>,
    /// Largest observed H¹ ratio.
    pub m0_emp: f64,
    /// Support radius non-decreasing in amplitude, up to one cell.
    pub support_monotone: bool,
    /// `rho_max` non-increasing in amplitude.
    pub rho_max_monotone: bool,
}

fn row(scenario: &Scenario, amplitude: f64) -> SweepRow {
    let s = scenario.with_amplitude(amplitude).expect("validated bump forcing");
    let data = execute(&s, Stage::Localize);
    let r = &data.report;
    let solver = r.solver.as_ref();
    let loc = r.localization.as_ref();
    let nan = f64::NAN;
    SweepRow {
        amplitude,
        rhs_l2: solver.map_or(nan, |v| v.rhs_l2),
        g_h1: solver.map_or(nan, |v| v.g_h1),
        support_radius: loc.map_or(nan, |v| v.support_radius),
        rho_max: loc.map_or(nan, |v| v.rho_max),
        h1_ratio: solver.map_or(nan, |v| v.a_priori_ratio),
        converged: r.status == RunStatus::Ok,
        error: r.error.clone(),
    }
}

/// Monotone-structure checks over the converged rows, ordered by amplitude.
fn summarize(scenario: &Scenario, rows: Vec<SweepRow>) -> SweepSummary {
    let mut ok: Vec<&SweepRow> = rows.iter().filter(|r| r.converged).collect();
    ok.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    let h = scenario.grid().map(|g| g.spacing()).unwrap_or(0.0);
    let support_monotone = ok
        .windows(2)
        .all(|w| w[1].support_radius >= w[0].support_radius - h);
    let rho_max_monotone = ok.windows(2).all(|w| w[1].rho_max <= w[0].rho_max + 1e-12);
    let m0_emp = ok.iter().map(|r| r.h1_ratio).fold(0.0, f64::max);
    SweepSummary {
        schema: SWEEP_SCHEMA.to_string(),
        name: scenario.name.clone(),
        config_hash: scenario.content_hash(),
        rows,
        m0_emp,
        support_monotone,
        rho_max_monotone,
    }
}

/// Runs every amplitude of `scenario.sweep` on `jobs` workers (0 picks the
/// number of CPUs). Failed amplitudes keep a row with their error.
pub fn run_sweep(scenario: &Scenario, jobs: usize) -> Result<SweepSummary, PipelineError> {
    let amplitudes = match &scenario.sweep {
        Some(s) if !s.amplitudes.is_empty() => s.amplitudes.clone(),
        _ => {
            return Err(ConfigError::Invalid {
                key: "sweep.amplitudes",
                reason: "no amplitudes given".into(),
            }
            .into())
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let rows = pool.install(|| amplitudes.par_iter().map(|&a| row(scenario, a)).collect());
    Ok(summarize(scenario, rows))
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else {
        String::new()
    }
}

pub fn write_sweep(summary: &SweepSummary, dir: &Path) -> Result<PathBuf, PipelineError> {
    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PipelineError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(wrap(dir))?;
    let csv_path = dir.join(SWEEP_CSV);
    let mut out = csv::Writer::from_path(&csv_path).map_err(nlslab_core::LabError::from)?;
    out.write_record([
        "amplitude",
        "rhs_l2",
        "g_h1",
        "support_radius",
        "rho_max",
        "h1_ratio",
        "converged",
    ])
    .map_err(nlslab_core::LabError::from)?;
    for r in &summary.rows {
        out.write_record([
            fmt(r.amplitude),
            fmt(r.rhs_l2),
            fmt(r.g_h1),
            fmt(r.support_radius),
            fmt(r.rho_max),
            fmt(r.h1_ratio),
            r.converged.to_string(),
        ])
        .map_err(nlslab_core::LabError::from)?;
    }
    out.flush().map_err(wrap(&csv_path))?;
    let json_path = dir.join(SWEEP_JSON);
    let text = serde_json::to_string_pretty(summary).expect("summary serialises") + "\n";
    fs::write(&json_path, text).map_err(wrap(&json_path))?;
    Ok(csv_path)
}
