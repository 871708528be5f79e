//! Gnuplot-ready data files derived from the CSV artifacts of a run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::pipeline::{ENERGY_FILE, EVOLUTION_FILE, PROFILE_FILE};

pub const PLOT_DIR: &str = "plots";

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("missing artifacts in {dir}: {}", .missing.join(", "))]
    MissingArtifacts { dir: PathBuf, missing: Vec<String> },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn column(&self, name: &str, path: &Path) -> Result<usize, PlotError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PlotError::Malformed {
                path: path.to_path_buf(),
                message: format!("no column `{name}`"),
            })
    }
}

fn read_table(path: &Path) -> Result<Table, PlotError> {
    let malformed = |message: String| PlotError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let header = rdr
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        // empty cells (e.g. a missing deviation) become NaN
        let row = rec
            .iter()
            .map(|c| if c.is_empty() { Ok(f64::NAN) } else { c.trim().parse::<f64>() })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| malformed(e.to_string()))?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

fn write_dat(path: &Path, comments: &[&str], columns: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), PlotError> {
    let mut text = String::new();
    for c in comments {
        writeln!(text, "# {c}").unwrap();
    }
    writeln!(text, "# columns: {}", columns.join(" ")).unwrap();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
        writeln!(text, "{}", line.join(" ")).unwrap();
    }
    fs::write(path, text)?;
    Ok(())
}

/// Writes `profile.dat`, `energy.dat`, `balance.dat` and `deviation.dat` into
/// `<dir>/plots` and returns their paths. Needs a run that reached evolution.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let needed = [PROFILE_FILE, ENERGY_FILE, EVOLUTION_FILE];
    let missing: Vec<String> = needed
        .iter()
        .filter(|f| !dir.join(f).is_file())
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PlotError::MissingArtifacts {
            dir: dir.to_path_buf(),
            missing,
        });
    }
    let out = dir.join(PLOT_DIR);
    fs::create_dir_all(&out)?;
    let mut written = Vec::new();

    let path = dir.join(PROFILE_FILE);
    let t = read_table(&path)?;
    let (x, re, im) = (t.column("coordinate", &path)?, t.column("re", &path)?, t.column("im", &path)?);
    let target = out.join("profile.dat");
    write_dat(
        &target,
        &["self-similar profile U"],
        &["x", "abs", "re", "im"],
        t.rows.iter().map(|r| vec![r[x], r[re].hypot(r[im]), r[re], r[im]]),
    )?;
    written.push(target);

    let path = dir.join(ENERGY_FILE);
    let t = read_table(&path)?;
    let names = ["rho", "E", "bmass", "l2mass", "wmass", "I", "Jterm", "Gball"];
    let idx = names
        .iter()
        .map(|n| t.column(n, &path))
        .collect::<Result<Vec<_>, _>>()?;
    let target = out.join("energy.dat");
    write_dat(
        &target,
        &["ball quantities of the gauged profile g centred at the origin"],
        &names,
        t.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()),
    )?;
    written.push(target);

    let path = dir.join(EVOLUTION_FILE);
    let t = read_table(&path)?;
    let (tc, mass, energy, res, drift) = (
        t.column("t", &path)?,
        t.column("mass", &path)?,
        t.column("energy", &path)?,
        t.column("mass_residual", &path)?,
        t.column("energy_drift", &path)?,
    );
    let target = out.join("balance.dat");
    write_dat(
        &target,
        &["mass and energy along the evolution"],
        &["t", "mass", "energy", "mass_residual", "energy_drift"],
        t.rows.iter().map(|r| vec![r[tc], r[mass], r[energy], r[res], r[drift]]),
    )?;
    written.push(target);

    let dev = t.column("deviation", &path)?;
    let target = out.join("deviation.dat");
    write_dat(
        &target,
        &["relative L2 deviation from the self-similar solution"],
        &["t", "deviation"],
        t.rows
            .iter()
            .filter(|r| r[dev].is_finite())
            .map(|r| vec![r[tc], r[dev]]),
    )?;
    written.push(target);
    Ok(written)
}
