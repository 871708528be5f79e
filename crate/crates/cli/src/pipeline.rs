//! The solve → gauge back → localize → evolve pipeline for one scenario, and
//! persistence of its report and artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nlslab_core::evolution::{evolve_selfsimilar, mass_balance, EvolutionRun, EvolveOptions};
use nlslab_core::localization::{analyze, support_radius, EnergyProfile, LocalizationReport, SUPPORT_THRESHOLD};
use nlslab_core::profile::{a_priori_ratio, solve_profile, uniqueness_probe, ProfileProblem, ProfileSolution};
use nlslab_core::selfsimilar::{gauge_backward, profile_rhs};
use nlslab_core::{derive_coefficients, Complex64, ComplexField, LabError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, Scenario};

pub const REPORT_SCHEMA: &str = "nlslab-report/1";

pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";
pub const GAUGED_FILE: &str = "g.csv";
pub const PROFILE_FILE: &str = "profile.csv";
pub const FORCING_FILE: &str = "forcing.csv";
pub const HISTORY_FILE: &str = "solver_history.json";
pub const ENERGY_FILE: &str = "energy_profile.csv";
pub const EVOLUTION_FILE: &str = "evolution.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Relative level at which snapshot supports are compared with `√t` growth.
/// Profiles vanish like a power of the distance to their edge, so lower
/// levels sit inside the edge and shift with the discretisation error.
pub const TRACKING_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// How far down the pipeline a run goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Solve,
    Localize,
    Evolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    NonConvergence,
    Failed,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::NonConvergence => 2,
            RunStatus::Failed => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub rhs_l2: f64,
    pub g_l2: f64,
    pub g_h1: f64,
    pub g_max_abs: f64,
    pub a_priori_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessSummary {
    pub guesses: usize,
    pub max_pairwise_distance: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSummary {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub grid_nodes: usize,
    pub grid_radius: f64,
    pub max_deviation: f64,
    pub final_deviation: f64,
    pub max_mass_residual: f64,
    pub max_edge: f64,
    pub initial_support_radius: f64,
    pub final_support_radius: f64,
    /// Snapshot support radius at [`TRACKING_THRESHOLD`] stays below `√(t/t0)`
    /// times its initial value plus two cells.
    pub support_tracks_sqrt_t: bool,
    pub max_inner_iterations: usize,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: Stage,
    pub status: RunStatus,
    pub scenario: Scenario,
    pub config_hash: String,
    pub solver: Option<SolverSummary>,
    pub uniqueness: Option<UniquenessSummary>,
    pub localization: Option<LocalizationReport>,
    pub evolution: Option<EvolutionSummary>,
    pub error: Option<String>,
}

/// Wall-clock seconds per stage; kept out of the report so reports stay byte-identical.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub solve: f64,
    pub localize: f64,
    pub evolve: f64,
    pub total: f64,
}

/// In-memory results of a pipeline run.
pub struct RunData {
    pub report: RunReport,
    pub solution: Option<ProfileSolution>,
    pub profile: Option<ComplexField>,
    pub forcing: Option<ComplexField>,
    pub energy: Option<EnergyProfile>,
    pub run: Option<EvolutionRun>,
    pub timing: Timing,
}

pub fn solver_summary(sol: &ProfileSolution, rhs: &ComplexField) -> SolverSummary {
    SolverSummary {
        converged: sol.converged,
        iterations: sol.iterations,
        residual_norm: sol.residual_norm,
        rhs_l2: rhs.l2_norm(),
        g_l2: sol.g.l2_norm(),
        g_h1: sol.g.h1_norm(),
        g_max_abs: sol.g.max_abs(),
        a_priori_ratio: a_priori_ratio(&sol.g, rhs),
    }
}

fn random_guess(grid: &std::sync::Arc<nlslab_core::Grid>, scale: f64, rng: &mut ChaCha8Rng) -> ComplexField {
    ComplexField::from_fn_dirichlet(grid.clone(), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    })
}

fn summarize_evolution(run: &EvolutionRun) -> EvolutionSummary {
    let h = run.grid.spacing();
    let s0 = support_radius(&run.snapshots[0].1, SUPPORT_THRESHOLD);
    let edge0 = support_radius(&run.snapshots[0].1, TRACKING_THRESHOLD);
    let tracks = run
        .snapshots
        .iter()
        .all(|(t, u)| support_radius(u, TRACKING_THRESHOLD) <= (t / run.t0).sqrt() * edge0 + 2.0 * h);
    EvolutionSummary {
        t0: run.t0,
        t1: run.t1,
        steps: run.steps,
        grid_nodes: run.grid.len(),
        grid_radius: run.grid.radius(),
        max_deviation: run.max_deviation(),
        final_deviation: run.diagnostics.last().and_then(|d| d.deviation).unwrap_or(0.0),
        max_mass_residual: mass_balance(run).into_iter().fold(0.0, f64::max),
        max_edge: run.max_edge(),
        initial_support_radius: s0,
        final_support_radius: run.diagnostics.last().map(|d| d.support_radius).unwrap_or(s0),
        support_tracks_sqrt_t: tracks,
        max_inner_iterations: run.diagnostics.iter().map(|d| d.inner_iterations).max().unwrap_or(0),
        snapshot_times: run.snapshots.iter().map(|(t, _)| *t).collect(),
    }
}

/// Runs the pipeline up to `stage` without touching the filesystem.
pub fn execute(scenario: &Scenario, stage: Stage) -> RunData {
    let start = Instant::now();
    let mut data = RunData {
        report: RunReport {
            schema: REPORT_SCHEMA.to_string(),
            command: stage,
            status: RunStatus::Ok,
            scenario: scenario.clone(),
            config_hash: scenario.content_hash(),
            solver: None,
            uniqueness: None,
            localization: None,
            evolution: None,
            error: None,
        },
        solution: None,
        profile: None,
        forcing: None,
        energy: None,
        run: None,
        timing: Timing::default(),
    };
    if let Err(e) = run_stages(scenario, stage, &mut data) {
        data.report.status = match e {
            LabError::NonConvergence(_) => RunStatus::NonConvergence,
            _ => RunStatus::Failed,
        };
        data.report.error = Some(e.to_string());
    }
    data.timing.total = start.elapsed().as_secs_f64();
    data
}

fn run_stages(scenario: &Scenario, stage: Stage, data: &mut RunData) -> nlslab_core::Result<()> {
    let params = scenario
        .params()
        .map_err(|e| LabError::DomainError(e.to_string()))?;
    let coeffs = derive_coefficients(&params);
    let forcing = scenario.forcing_field()?;
    let rhs = profile_rhs(&forcing, coeffs.gauge);
    data.forcing = Some(forcing.clone());

    let clock = Instant::now();
    let problem = ProfileProblem::new(params, coeffs, rhs.clone(), scenario.solver.clone())?;
    let grid = problem.grid().clone();
    let solution = match solve_profile(&problem, &ComplexField::zeros(grid.clone())) {
        Ok(s) => s,
        Err(LabError::NonConvergence(best)) => *best,
        Err(e) => return Err(e),
    };
    data.report.solver = Some(solver_summary(&solution, &rhs));
    let profile = gauge_backward(&solution.g, coeffs.gauge);
    data.profile = Some(profile.clone());
    data.solution = Some(solution.clone());
    if !solution.converged {
        data.timing.solve = clock.elapsed().as_secs_f64();
        return Err(LabError::NonConvergence(Box::new(solution)));
    }

    let probes = scenario.probes;
    if probes.uniqueness_guesses > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let scale = probes.guess_scale * scenario.forcing_amplitude();
        let guesses: Vec<_> = (0..probes.uniqueness_guesses)
            .map(|_| random_guess(&grid, scale, &mut rng))
            .collect();
        data.report.uniqueness = Some(match uniqueness_probe(&problem, &guesses) {
            Ok(r) => UniquenessSummary {
                guesses: guesses.len(),
                max_pairwise_distance: Some(r.max_pairwise_distance),
                skipped: None,
            },
            Err(e @ LabError::DomainError(_)) => UniquenessSummary {
                guesses: guesses.len(),
                max_pairwise_distance: None,
                skipped: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        });
    }
    data.timing.solve = clock.elapsed().as_secs_f64();
    if stage == Stage::Solve {
        return Ok(());
    }

    let clock = Instant::now();
    let (report, energy) = analyze(&solution.g, &rhs, &profile, &forcing, &params, &coeffs, &scenario.analysis)?;
    data.report.localization = Some(report);
    data.energy = Some(energy);
    data.timing.localize = clock.elapsed().as_secs_f64();
    if stage == Stage::Localize {
        return Ok(());
    }

    let clock = Instant::now();
    let e = scenario.evolution;
    let opts = EvolveOptions {
        t0: e.t0,
        t1: e.t1,
        steps: e.steps,
        snapshot_stride: e.snapshot_stride,
    };
    let run = evolve_selfsimilar(&profile, &forcing, &params, opts)?;
    data.report.evolution = Some(summarize_evolution(&run));
    data.run = Some(run);
    data.timing.evolve = clock.elapsed().as_secs_f64();
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(io_err(path))
}

fn create(path: &Path) -> Result<fs::File, PipelineError> {
    fs::File::create(path).map_err(io_err(path))
}

/// Writes the report, the timing sidecar and every artifact produced by the run.
pub fn persist(data: &RunData, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let report = serde_json::to_string_pretty(&data.report).expect("report serialises");
    write_text(&dir.join(REPORT_FILE), &(report + "\n"))?;
    let timing = serde_json::to_string_pretty(&data.timing).expect("timing serialises");
    write_text(&dir.join(TIMING_FILE), &(timing + "\n"))?;
    if let Some(f) = &data.forcing {
        f.write_csv(create(&dir.join(FORCING_FILE))?)?;
    }
    if let Some(sol) = &data.solution {
        sol.g.write_csv(create(&dir.join(GAUGED_FILE))?)?;
        write_text(&dir.join(HISTORY_FILE), &(sol.history_json() + "\n"))?;
    }
    if let Some(u) = &data.profile {
        u.write_csv(create(&dir.join(PROFILE_FILE))?)?;
    }
    if let Some(e) = &data.energy {
        e.write_csv(create(&dir.join(ENERGY_FILE))?)?;
    }
    if let Some(run) = &data.run {
        run.write_diagnostics_csv(create(&dir.join(EVOLUTION_FILE))?)?;
        let snaps = dir.join(SNAPSHOT_DIR);
        fs::create_dir_all(&snaps).map_err(io_err(&snaps))?;
        for (k, (_, field)) in run.snapshots.iter().enumerate() {
            field.write_csv(create(&snaps.join(format!("u-{k:04}.csv")))?)?;
        }
    }
    Ok(())
}

/// Runs `scenario` up to `stage` and writes everything to `<root>/<name>-<hash>`.
pub fn run_scenario(scenario: &Scenario, stage: Stage, root: &Path) -> Result<(PathBuf, RunData), PipelineError> {
    let data = execute(scenario, stage);
    let dir = scenario.output_dir(root);
    persist(&data, &dir)?;
    Ok((dir, data))
}
