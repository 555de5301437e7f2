use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::analysis::{
    build_test_function, check_blowup_criterion, check_global_smallness, first_moment,
    write_criteria_csv, write_diagnostics_csv, BlowupCriterion, CriterionReport, DiagnosticsRow,
    MomentProbe, TestFunction,
};
use crate::error::{Error, Result};
use crate::integrator::{
    advance_with, Frame, ObservationPlan, Observer, Outcome, SimState, Trajectory,
};
use crate::operators::FractionalExponent;
use crate::sci;
use crate::spectral::{make_grid, synthesize_initial, Field};

use super::config::RunConfig;
use super::presets::reference_gns;

/// Precomputed constants shared between runs (sweep cells reuse them).
#[derive(Clone, Debug, Default)]
pub struct RunContext {
    pub c_hat: Option<f64>,
    pub test_function: Option<Arc<TestFunction>>,
}

impl RunContext {
    /// Constants a run of `config` needs: the GNS constant at `p = 1/alpha` for
    /// `alpha <= 1` and the test function for `alpha < 1`.
    pub fn prepare(config: &RunConfig) -> Result<Self> {
        let c_hat = match config.c_hat {
            Some(c) => Some(c),
            None if config.alpha <= 1.0 => {
                Some(reference_gns(1.0 / config.alpha, config.alpha, config.seed)?.c_hat)
            }
            None => None,
        };
        let test_function = if config.alpha < 1.0 {
            let t = &config.test_function;
            let grid = make_grid(t.n, t.half_width)?;
            Some(Arc::new(build_test_function(config.alpha, config.beta(), &grid)?))
        } else {
            None
        };
        Ok(RunContext {
            c_hat,
            test_function,
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub trajectory: Trajectory,
    pub criteria: Vec<CriterionReport>,
    pub summary: BTreeMap<String, String>,
}

impl RunReport {
    pub fn outcome(&self) -> Outcome {
        self.trajectory.outcome
    }
}

/// Process exit code for an outcome: 3 when the solution could not be followed.
pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Completed | Outcome::BlowupDetected => 0,
        Outcome::ResolutionLost | Outcome::StepFloor => 3,
    }
}

pub fn snapshot_name(time: f64) -> String {
    format!("t_{time:.6e}.csv")
}

struct SnapshotWriter {
    dir: Option<PathBuf>,
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, state: &SimState, _: &DiagnosticsRow) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(snapshot_name(state.time()));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            state.field().write_csv(&mut w).map_err(|e| Error::io(&path, e))?;
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// `||u - M/(pi(1+y^2))||_1 / M`.
pub fn cauchy_residual(u: &Field) -> f64 {
    let m = u.mass();
    let dx = u.grid().dx();
    let d: f64 = u
        .grid()
        .coords()
        .iter()
        .zip(u.values())
        .map(|(y, v)| (v - m / (std::f64::consts::PI * (1.0 + y * y))).abs())
        .sum();
    dx * d / m
}

pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let ctx = RunContext::prepare(config)?;
    run_with(config, &ctx)
}

/// Runs one simulation and writes its artifacts into `config.output_dir`:
/// `config.toml`, `diagnostics.csv`, `snapshots/`, `criteria.csv` and, last, `summary`.
pub fn run_with(config: &RunConfig, ctx: &RunContext) -> Result<RunReport> {
    config.validate()?;
    let grid = make_grid(config.grid.n, config.grid.half_width)?;
    let init = &config.initial;
    let rho0 = synthesize_initial(init.family, init.mass, init.scale, init.center, &grid)?;
    let alpha = FractionalExponent::new(config.alpha)?;

    let mut summary = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        summary.insert(k.to_string(), v);
    };
    let mut criteria = Vec::new();
    let mut probe = None;

    let c_hat = if config.alpha <= 1.0 {
        ctx.c_hat.or(config.c_hat)
    } else {
        None
    };
    match c_hat {
        Some(c) => {
            let r = check_global_smallness(&rho0, config.alpha, c)?;
            put("smallness_satisfied", r.satisfied.to_string());
            put("smallness_margin", sci(r.margin));
            put("c_hat", sci(c));
            criteria.push(r);
        }
        None => put("smallness_satisfied", "n/a".into()),
    }

    match &ctx.test_function {
        Some(tf) if config.alpha < 1.0 => {
            let crit = BlowupCriterion::new(tf, rho0.mass())?;
            probe = Some(MomentProbe {
                profile: tf.profile().clone(),
                lambda: crit.lambda,
            });
            put("lambda", sci(crit.lambda));
            match check_blowup_criterion(&rho0, config.alpha, &crit) {
                Ok(r) => {
                    put("blowup_satisfied", r.satisfied.to_string());
                    put("blowup_ratio", sci(r.ratio()));
                    criteria.push(r);
                }
                Err(Error::NotEven(_)) => put("blowup_satisfied", "n/a_not_even".into()),
                Err(e) => return Err(e),
            }
        }
        _ => put("blowup_satisfied", "n/a".into()),
    }

    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let toml = config.to_toml()?;
    write_file(&out.join("config.toml"), |w| w.write_all(toml.as_bytes()))?;
    let snap_dir = out.join("snapshots");
    if config.snapshots {
        fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
    }

    let state = SimState::new(config.frame, 0.0, rho0.clone(), alpha, config.chi)?;
    let plan = ObservationPlan {
        interval: config.observation_interval,
        detector: config.detector.clone(),
        probe,
        keep_snapshots: false,
    };
    let mut writer = SnapshotWriter {
        dir: config.snapshots.then_some(snap_dir),
    };
    let traj = advance_with(&state, config.horizon, &config.control, &plan, &mut writer)?;

    write_file(&out.join("diagnostics.csv"), |w| {
        write_diagnostics_csv(&traj.diagnostics, w)
    })?;
    write_file(&out.join("criteria.csv"), |w| write_criteria_csv(&criteria, w))?;

    let fin = traj.final_state.field();
    put("schema_version", super::config::SCHEMA_VERSION.to_string());
    put("outcome", traj.outcome.as_str().into());
    put("halt_reason", traj.halt_reason.into());
    put("halt_time", sci(traj.halt_time()));
    put("steps", traj.steps.to_string());
    put("smallest_dt", sci(traj.smallest_dt));
    put("degraded", traj.degraded.to_string());
    put("frame", config.frame.as_str().into());
    put("mass_initial", sci(rho0.mass()));
    put("mass_final", sci(fin.mass()));
    put("max_mass_drift", sci(traj.max_mass_drift));
    put("first_moment_initial", sci(first_moment(&rho0)));
    if let Some(last) = traj.diagnostics.last() {
        put("l2_final", sci(last.l2));
        put("l_inf_final", sci(last.l_inf));
    }
    if config.frame == Frame::Rescaled && config.chi == 0.0 {
        put("cauchy_residual", sci(cauchy_residual(fin)));
    }
    let text: String = summary.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    write_file(&out.join("summary"), |w| w.write_all(text.as_bytes()))?;

    Ok(RunReport {
        trajectory: traj,
        criteria,
        summary,
    })
}

/// Parses a `key=value` summary file.
pub fn read_summary(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::arg(format!("bad summary line `{line}`")))?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}
