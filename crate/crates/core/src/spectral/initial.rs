use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::error::{Error, Result};

/// Shape of a synthesized initial density.
///
/// * `Gaussian`: normal profile with standard deviation `scale`.
/// * `Cauchy`: the periodized Cauchy density `(1/2L) sinh(a) / (cosh(a) - cos(pi (x-c)/L))`,
///   `a = pi*scale/L`, i.e. the sum of all `2L`-translates of `scale/(pi (scale^2 + x^2))`.
///   Its algebraic tails never fit inside the box, so it is exempt from the boundary check.
/// * `TwoBump`: two equal Gaussians of standard deviation `scale/2` at `center +- 1.5*scale`.
/// * `Indicator`: constant on the half-open interval `[center - scale, center + scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialFamily {
    Gaussian,
    Cauchy,
    TwoBump,
    Indicator,
}

impl std::str::FromStr for InitialFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(InitialFamily::Gaussian),
            "cauchy" => Ok(InitialFamily::Cauchy),
            "two_bump" => Ok(InitialFamily::TwoBump),
            "indicator" => Ok(InitialFamily::Indicator),
            other => Err(Error::arg(format!("unknown initial family `{other}`"))),
        }
    }
}

const BOUNDARY_DECAY: f64 = 1e-12;

/// Samples a nonnegative density of total mass `mass` (rectangle rule, exact to roundoff).
pub fn synthesize_initial(
    family: InitialFamily,
    mass: f64,
    scale: f64,
    center: f64,
    grid: &Arc<Grid>,
) -> Result<Field> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::arg(format!("mass must be positive, got {mass}")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::arg(format!("scale must be positive, got {scale}")));
    }
    if !center.is_finite() {
        return Err(Error::arg("center must be finite"));
    }
    let l = grid.half_width();
    let shape: Box<dyn Fn(f64) -> f64> = match family {
        InitialFamily::Gaussian => {
            Box::new(move |x: f64| (-(x - center).powi(2) / (2.0 * scale * scale)).exp())
        }
        InitialFamily::TwoBump => {
            let sd = 0.5 * scale;
            let off = 1.5 * scale;
            Box::new(move |x: f64| {
                (-(x - center - off).powi(2) / (2.0 * sd * sd)).exp()
                    + (-(x - center + off).powi(2) / (2.0 * sd * sd)).exp()
            })
        }
        InitialFamily::Indicator => {
            let (lo, hi) = (center - scale, center + scale);
            if lo <= -l || hi > l {
                return Err(Error::DomainTooSmall { ratio: 1.0 });
            }
            Box::new(move |x: f64| if x >= lo && x < hi { 1.0 } else { 0.0 })
        }
        InitialFamily::Cauchy => {
            let a = PI * scale / l;
            let (sh, ch) = (a.sinh(), a.cosh());
            Box::new(move |x: f64| sh / (ch - (PI * (x - center) / l).cos()) / (2.0 * l))
        }
    };

    if matches!(family, InitialFamily::Gaussian | InitialFamily::TwoBump) {
        let edge = shape(-l).max(shape(l));
        if edge > BOUNDARY_DECAY {
            return Err(Error::DomainTooSmall { ratio: edge });
        }
    }

    let mut values: Vec<f64> = (0..grid.n()).map(|i| shape(grid.x(i))).collect();
    let raw = grid.dx() * values.iter().sum::<f64>();
    if !(raw > 0.0) {
        return Err(Error::arg(format!(
            "{family:?} profile has no support on the grid (scale {scale} vs dx {})",
            grid.dx()
        )));
    }
    let c = mass / raw;
    values.iter_mut().for_each(|v| *v *= c);
    Field::new(grid.clone(), values)
}
