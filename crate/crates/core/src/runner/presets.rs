use std::path::Path;

use crate::analysis::{build_test_function, default_beta, BlowupCriterion, DetectorConfig};
use crate::error::{Error, Result};
use crate::inequality::{estimate_gns_constant, GnsEstimate, TrialFamily};
use crate::integrator::{Frame, StepControl};
use crate::spectral::{make_grid, InitialFamily};

use super::config::{
    GridConfig, InitialConfig, RunConfig, SweepAxes, SweepConfig, TestFunctionConfig,
    SCHEMA_VERSION,
};

/// Evaluations per family member for reference GNS estimates.
pub const REFERENCE_GNS_BUDGET: usize = 300;

/// GNS constant estimate on the reference grid and standard family.
pub fn reference_gns(p: f64, alpha: f64, seed: u64) -> Result<GnsEstimate> {
    let family = TrialFamily::standard(TrialFamily::reference_grid()?)?;
    estimate_gns_constant(p, alpha, &family, REFERENCE_GNS_BUDGET, seed)
}

/// Effective critical mass `4/C(1,1)` at `alpha = 1`.
pub fn critical_mass_alpha1() -> Result<f64> {
    Ok(4.0 / reference_gns(1.0, 1.0, 1)?.c_hat)
}

pub const PRESETS: [&str; 5] = [
    "subcritical-alpha1",
    "subcritical-alpha1-rescaled",
    "supercritical-alpha1",
    "supercritical-alpha05",
    "pure-diffusion-rescaled",
];

pub const SWEEP_PRESETS: [&str; 1] = ["sweep-alpha05"];

fn base(alpha: f64, frame: Frame, output_dir: &Path) -> RunConfig {
    RunConfig {
        schema_version: SCHEMA_VERSION,
        alpha,
        chi: 1.0,
        frame,
        horizon: 10.0,
        observation_interval: 0.1,
        seed: 1,
        output_dir: output_dir.to_path_buf(),
        c_hat: None,
        snapshots: true,
        grid: GridConfig {
            n: 2048,
            half_width: 40.0,
        },
        initial: InitialConfig {
            family: InitialFamily::Gaussian,
            mass: 1.0,
            scale: 1.0,
            center: 0.0,
        },
        control: StepControl::default(),
        detector: DetectorConfig::default(),
        test_function: TestFunctionConfig::default(),
    }
}

/// Mass of a Gaussian of scale `s` whose blow-up criterion holds with ratio `margin` at
/// `alpha = 0.5`: the criterion reads `(M s sqrt(2/pi))^{1/2} <= K2 M^{3/2}`.
pub fn supercritical_mass_alpha05(scale: f64, margin: f64) -> Result<f64> {
    let tf_cfg = TestFunctionConfig::default();
    let grid = make_grid(tf_cfg.n, tf_cfg.half_width)?;
    let tf = build_test_function(0.5, default_beta(0.5), &grid)?;
    let k2 = BlowupCriterion::new(&tf, 1.0)?.k2_effective;
    let moment = scale * (2.0 / std::f64::consts::PI).sqrt();
    Ok(margin * moment.sqrt() / k2)
}

/// Named scenarios. Masses are set relative to the estimated constants, so building a
/// preset runs the (deterministic) constant estimation.
pub fn preset(name: &str, output_dir: &Path) -> Result<RunConfig> {
    let cfg = match name {
        "subcritical-alpha1" | "subcritical-alpha1-rescaled" | "supercritical-alpha1" => {
            let c_hat = reference_gns(1.0, 1.0, 1)?.c_hat;
            let critical = 4.0 / c_hat;
            let mut c = base(1.0, Frame::Physical, output_dir);
            c.c_hat = Some(c_hat);
            match name {
                "subcritical-alpha1" => {
                    c.initial.mass = 0.5 * critical;
                }
                "subcritical-alpha1-rescaled" => {
                    c.frame = Frame::Rescaled;
                    c.initial.mass = 0.5 * critical;
                    c.horizon = 8.0;
                    c.observation_interval = 0.25;
                }
                _ => {
                    c.initial.mass = 4.0 * critical;
                    c.horizon = 5.0;
                    c.observation_interval = 0.01;
                    c.control.dt_max = 1e-3;
                }
            }
            c
        }
        "supercritical-alpha05" => {
            let mut c = base(0.5, Frame::Physical, output_dir);
            c.initial.mass = supercritical_mass_alpha05(1.0, 2.2)?;
            c.grid = GridConfig {
                n: 2048,
                half_width: 7.5,
            };
            c.horizon = 1.0;
            c.observation_interval = 1e-3;
            c.control = StepControl {
                safety: 0.05,
                dt_max: 1e-3,
                ..StepControl::default()
            };
            c
        }
        "pure-diffusion-rescaled" => {
            let mut c = base(1.0, Frame::Rescaled, output_dir);
            c.chi = 0.0;
            c.horizon = 8.0;
            c.observation_interval = 0.5;
            c
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset `{name}`; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// 5 x 5 mass/scale sweep at `alpha = 0.5`.
pub fn preset_sweep(name: &str, output_dir: &Path) -> Result<SweepConfig> {
    if name != "sweep-alpha05" {
        return Err(Error::Config(format!(
            "unknown sweep preset `{name}`; available: {}",
            SWEEP_PRESETS.join(", ")
        )));
    }
    let mut b = base(0.5, Frame::Physical, output_dir);
    b.grid = GridConfig {
        n: 4096,
        half_width: 7.5,
    };
    b.horizon = 1.0;
    b.observation_interval = 0.01;
    b.snapshots = false;
    b.control = StepControl {
        safety: 0.05,
        dt_max: 1e-3,
        ..StepControl::default()
    };
    b.c_hat = Some(reference_gns(2.0, 0.5, 1)?.c_hat);
    let cfg = SweepConfig {
        schema_version: SCHEMA_VERSION,
        output_dir: output_dir.to_path_buf(),
        parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        axes: SweepAxes {
            alpha: vec![0.5],
            mass: vec![10.0, 30.0, 100.0, 300.0, 1000.0],
            scale: vec![0.25, 0.375, 0.5, 0.75, 1.0],
        },
        base: b,
    };
    cfg.validate()?;
    Ok(cfg)
}
