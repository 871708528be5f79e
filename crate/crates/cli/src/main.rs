use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlslab::{emit_plots, run_scenario, run_sweep, write_sweep, Scenario, Stage, DEFAULT_OUT};

/// Self-similar profiles of the forced sublinear Schrödinger equation.
#[derive(Debug, Parser)]
#[command(name = "nlslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output root; each run writes to `<root>/<name>-<hash>`.
    #[arg(long, global = true, value_name = "DIR", env = "NLSLAB_OUT")]
    out: Option<PathBuf>,

    /// Sweep workers (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the profile.
    Solve,
    /// Solve and run the localisation analysis.
    Localize,
    /// Solve, localise and evolve the reconstructed solution.
    Evolve,
    /// Solve and localise once per amplitude in `[sweep]`.
    Sweep,
    /// Write gnuplot data files for a run directory.
    EmitPlots {
        /// Run directory produced by `evolve`.
        dir: PathBuf,
    },
    /// Parse and check a scenario file.
    ValidateConfig,
}

fn load(cli: &Cli) -> Result<Scenario, String> {
    let path = cli.config.as_deref().ok_or("--config is required")?;
    let mut s = Scenario::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn run(cli: &Cli, stage: Stage, root: &Path) -> Result<ExitCode, String> {
    let scenario = load(cli)?;
    let (dir, data) = run_scenario(&scenario, stage, root).map_err(|e| e.to_string())?;
    let code = data.report.status.exit_code();
    if let Some(err) = &data.report.error {
        eprintln!("nlslab: {err}");
    }
    println!("{}", dir.display());
    Ok(ExitCode::from(code as u8))
}

fn dispatch(cli: &Cli) -> Result<ExitCode, String> {
    let root = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match &cli.command {
        Command::Solve => run(cli, Stage::Solve, &root),
        Command::Localize => run(cli, Stage::Localize, &root),
        Command::Evolve => run(cli, Stage::Evolve, &root),
        Command::Sweep => {
            let scenario = load(cli)?;
            let summary = run_sweep(&scenario, cli.jobs).map_err(|e| e.to_string())?;
            let path = write_sweep(&summary, &scenario.output_dir(&root)).map_err(|e| e.to_string())?;
            for r in summary.rows.iter().filter(|r| !r.converged) {
                eprintln!("nlslab: amplitude {}: {}", r.amplitude, r.error.as_deref().unwrap_or("failed"));
            }
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::EmitPlots { dir } => {
            for p in emit_plots(dir).map_err(|e| e.to_string())? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateConfig => {
            let s = load(cli)?;
            println!("{}: ok ({}-{})", s.name, s.name, s.content_hash());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("nlslab: {msg}");
            ExitCode::from(1)
        }
    }
}
