use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::Outcome;
use crate::sci;

use super::config::{SweepCell, SweepConfig};
use super::run::{read_summary, run_with, RunContext};

/// One cell of a phase diagram.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub alpha: f64,
    pub mass: f64,
    pub scale: f64,
    pub first_moment: f64,
    /// `None` when the criterion does not apply.
    pub smallness_satisfied: Option<bool>,
    pub blowup_satisfied: Option<bool>,
    /// `None` when the cell failed.
    pub outcome: Option<Outcome>,
    /// Detection or halt time, the horizon for completed runs.
    pub time: f64,
    /// `ok` or `error: <message>`.
    pub status: String,
}

pub const PHASE_HEADER: &str =
    "alpha,mass,scale,first_moment,smallness_satisfied,blowup_satisfied,outcome,time,status";

fn flag(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

impl PhasePoint {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            sci(self.alpha),
            sci(self.mass),
            sci(self.scale),
            sci(self.first_moment),
            flag(self.smallness_satisfied),
            flag(self.blowup_satisfied),
            self.outcome.map_or("", |o| o.as_str()),
            sci(self.time),
            self.status
        )
    }

    fn from_summary(cell: &SweepCell, s: &BTreeMap<String, String>) -> Result<Self> {
        let num = |k: &str| -> Result<f64> {
            s.get(k)
                .ok_or_else(|| Error::arg(format!("summary lacks `{k}`")))?
                .parse::<f64>()
                .map_err(|e| Error::arg(format!("summary `{k}`: {e}")))
        };
        let boolean = |k: &str| s.get(k).and_then(|v| v.parse::<bool>().ok());
        let outcome = s
            .get("outcome")
            .ok_or_else(|| Error::arg("summary lacks `outcome`"))?
            .parse::<Outcome>()?;
        Ok(PhasePoint {
            alpha: cell.alpha,
            mass: cell.mass,
            scale: cell.scale,
            first_moment: num("first_moment_initial")?,
            smallness_satisfied: boolean("smallness_satisfied"),
            blowup_satisfied: boolean("blowup_satisfied"),
            outcome: Some(outcome),
            time: num("halt_time")?,
            status: "ok".into(),
        })
    }

    fn failed(cell: &SweepCell, e: &Error) -> Self {
        let msg = e.to_string().replace([',', '\n'], ";");
        PhasePoint {
            alpha: cell.alpha,
            mass: cell.mass,
            scale: cell.scale,
            first_moment: f64::NAN,
            smallness_satisfied: None,
            blowup_satisfied: None,
            outcome: None,
            time: f64::NAN,
            status: format!("error: {msg}"),
        }
    }
}

pub fn write_phase_csv<W: Write>(points: &[PhasePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PHASE_HEADER}")?;
    for p in points {
        writeln!(out, "{}", p.csv_line())?;
    }
    Ok(())
}

fn run_cell(cell: &SweepCell, ctx: &RunContext) -> Result<PhasePoint> {
    let summary = cell.config.output_dir.join("summary");
    if !summary.exists() {
        run_with(&cell.config, ctx)?;
    }
    PhasePoint::from_summary(cell, &read_summary(&summary)?)
}

/// Runs every cell (up to `parallelism` at once) and writes `phase.csv`. Cells whose
/// `summary` already exists are read back instead of recomputed; failures are recorded
/// per cell and do not stop the sweep.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<PhasePoint>> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let toml = cfg.to_toml()?;
    let path = out.join("sweep.toml");
    fs::write(&path, toml).map_err(|e| Error::io(&path, e))?;

    let cells = cfg.cells();
    let mut contexts: Vec<(f64, Arc<RunContext>)> = Vec::new();
    for &alpha in &cfg.axes.alpha {
        let probe = cells.iter().find(|c| c.alpha == alpha).expect("nonempty axes");
        contexts.push((alpha, Arc::new(RunContext::prepare(&probe.config)?)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::arg(format!("thread pool: {e}")))?;
    let points: Vec<PhasePoint> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let ctx = &contexts.iter().find(|(a, _)| *a == cell.alpha).unwrap().1;
                run_cell(cell, ctx).unwrap_or_else(|e| PhasePoint::failed(cell, &e))
            })
            .collect()
    });
    write_phase(out, &points)?;
    Ok(points)
}

fn write_phase(out: &Path, points: &[PhasePoint]) -> Result<()> {
    let path = out.join("phase.csv");
    let mut buf = Vec::new();
    write_phase_csv(points, &mut buf).map_err(|e| Error::io(&path, e))?;
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))
}
