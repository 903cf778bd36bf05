//! Configuration-driven simulation: initial data, time stepping, the
//! diagnostics CSV and field dumps.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use crate::config::{DumpFormat, SimConfig};
use crate::error::Result;
use crate::io::{dump_field, CsvWriter};
use crate::scenario::initial_data;
use crate::stepper::{compatibility_residual, run, DiagnosticsRow};

pub const CSV_NAME: &str = "diagnostics.csv";

/// Boundary residual above which the initial data is reported as outside
/// the compatible class.
pub const COMPATIBILITY_WARN: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub rows: Vec<DiagnosticsRow>,
    pub compatibility_residual: f64,
    pub max_drift: f64,
    pub csv: PathBuf,
    pub dumps: Vec<PathBuf>,
}

/// Runs the configured scenario, writing `diagnostics.csv` and the field
/// dumps into `cfg.output.dir`. Progress lines go to `log`.
pub fn simulate(cfg: &SimConfig, mut log: impl FnMut(&str)) -> Result<SimulateSummary> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    let (u0, q0, bc) = initial_data(cfg)?;
    let compat = compatibility_residual(&cfg.material, &u0, &q0, &bc)?;
    log(&format!("compatibility_residual = {compat:e}"));
    if compat > COMPATIBILITY_WARN {
        log(&format!("warning: initial data is not compatible with the anchoring (residual {compat:e} > {COMPATIBILITY_WARN:e})"));
    }

    let csv = dir.join(CSV_NAME);
    let mut writer = CsvWriter::new(BufWriter::new(File::create(&csv)?))?;
    let mut dumps = Vec::new();
    let traj = run(
        &cfg.material,
        (u0, q0),
        &bc,
        &cfg.stepper,
        cfg.steps,
        cfg.output.snapshot_every,
        |row, state| {
            writer.write_row(row)?;
            for fmt in &cfg.output.formats {
                let vtk = *fmt == DumpFormat::Vtk;
                dumps.push(dump_field(&dir, "u", row.step, &state.u, vtk)?);
                dumps.push(dump_field(&dir, "q", row.step, &state.q.map(|q| *q.as_mat()), vtk)?);
                dumps.push(dump_field(&dir, "p", row.step, &state.p, vtk)?);
            }
            log(&format!(
                "step {:>6}  t = {:.6e}  energy = {:.9e}  residual = {:.3e}",
                row.step,
                row.t,
                row.report.total(),
                row.report.energy_law_residual
            ));
            Ok(())
        },
    )?;
    writer.into_inner()?;
    log(&format!("max drift from initial state = {:e}", traj.max_drift));
    Ok(SimulateSummary {
        rows: traj.rows,
        compatibility_residual: compat,
        max_drift: traj.max_drift,
        csv,
        dumps,
    })
}
