use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::DetectorConfig;
use crate::error::{Error, Result};
use crate::integrator::{Frame, StepControl};
use crate::operators::FractionalExponent;
use crate::spectral::InitialFamily;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub family: InitialFamily,
    pub mass: f64,
    pub scale: f64,
    #[serde(default)]
    pub center: f64,
}

/// Grid of the auxiliary test function used for the blow-up criterion and `I_lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionConfig {
    /// Exponent of the far-field power `|x|^{1-beta}`; defaults to `1 - alpha/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub n: usize,
    pub half_width: f64,
}

impl Default for TestFunctionConfig {
    fn default() -> Self {
        TestFunctionConfig {
            beta: None,
            n: 1024,
            half_width: 100.0,
        }
    }
}

/// One simulation, serialized as TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub alpha: f64,
    pub chi: f64,
    pub frame: Frame,
    pub horizon: f64,
    pub observation_interval: f64,
    /// Seed of the GNS constant search when `c_hat` is not given.
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// GNS constant `C(1/alpha, alpha)` for the smallness criterion; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<f64>,
    /// Write a snapshot CSV at every observation.
    #[serde(default = "yes")]
    pub snapshots: bool,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub control: StepControl,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub test_function: TestFunctionConfig,
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Rejects anything a module would reject later, before any computation.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return cfg(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let alpha = FractionalExponent::new(self.alpha)
            .map_err(|_| Error::Config(format!("alpha must be in (0, 2], got {}", self.alpha)))?;
        if !(self.chi.is_finite() && self.chi >= 0.0) {
            return cfg(format!("chi must be finite and nonnegative, got {}", self.chi));
        }
        if self.frame == Frame::Rescaled && alpha.value() != 1.0 {
            return cfg("the rescaled frame requires alpha = 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return cfg(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.observation_interval > 0.0 && self.observation_interval.is_finite()) {
            return cfg(format!(
                "observation_interval must be positive, got {}",
                self.observation_interval
            ));
        }
        if let Some(c) = self.c_hat {
            if !(c > 0.0 && c.is_finite()) {
                return cfg(format!("c_hat must be positive, got {c}"));
            }
        }
        let g = &self.grid;
        if g.n < 16 || !g.n.is_power_of_two() {
            return cfg(format!("grid.n must be a power of two >= 16, got {}", g.n));
        }
        if !(g.half_width > 0.0 && g.half_width.is_finite()) {
            return cfg(format!("grid.half_width must be positive, got {}", g.half_width));
        }
        let i = &self.initial;
        if !(i.mass > 0.0 && i.mass.is_finite()) {
            return cfg(format!("initial.mass must be positive, got {}", i.mass));
        }
        if !(i.scale > 0.0 && i.scale.is_finite()) {
            return cfg(format!("initial.scale must be positive, got {}", i.scale));
        }
        if !(i.center.is_finite() && i.center.abs() < g.half_width) {
            return cfg(format!("initial.center must lie inside the box, got {}", i.center));
        }
        let t = &self.test_function;
        if t.n < 16 || !t.n.is_power_of_two() || !(t.half_width > 2.0) {
            return cfg("test_function needs n a power of two and half_width > 2".into());
        }
        if let Some(b) = t.beta {
            if !(b > 0.0 && b < 1.0) {
                return cfg(format!("test_function.beta must be in (0, 1), got {b}"));
            }
            if self.alpha < 1.0 && self.alpha + b <= 1.0 {
                return cfg(format!("alpha + beta must exceed 1, got {} + {b}", self.alpha));
            }
        }
        self.control.validate()?;
        self.detector.validate()?;
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.test_function
            .beta
            .unwrap_or_else(|| crate::analysis::default_beta(self.alpha.min(1.0)))
    }
}

/// Axes of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub alpha: Vec<f64>,
    pub mass: Vec<f64>,
    pub scale: Vec<f64>,
}

/// A grid of runs sharing `base` except for `alpha`, `initial.mass` and `initial.scale`.
/// Cell outputs live under `output_dir/cells/`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub parallelism: usize,
    pub axes: SweepAxes,
    pub base: RunConfig,
}

fn one() -> usize {
    1
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("sweep config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be positive".into()));
        }
        let a = &self.axes;
        if a.alpha.is_empty() || a.mass.is_empty() || a.scale.is_empty() {
            return Err(Error::Config("sweep axes must be nonempty".into()));
        }
        for cell in self.cells() {
            cell.config.validate()?;
        }
        Ok(())
    }

    /// Cells in row-major order over (alpha, mass, scale).
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &alpha in &self.axes.alpha {
            for &mass in &self.axes.mass {
                for &scale in &self.axes.scale {
                    let mut config = self.base.clone();
                    config.alpha = alpha;
                    config.initial.mass = mass;
                    config.initial.scale = scale;
                    let name = format!("a{}_m{}_s{}", alpha, mass, scale);
                    config.output_dir = self.output_dir.join("cells").join(&name);
                    out.push(SweepCell {
                        alpha,
                        mass,
                        scale,
                        name,
                        config,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    pub mass: f64,
    pub scale: f64,
    pub name: String,
    pub config: RunConfig,
}
