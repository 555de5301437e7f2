use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::integrator::SimState;
use crate::operators::{frac_laplacian_spectral, FractionalExponent};
use crate::spectral::{hs_seminorm, lp_norm, Field, Grid};

/// Both sides of `int rho^{p-1} Lambda^alpha rho >= 4(p-1)/p^2 ||rho^{p/2}||^2_{H^{alpha/2}}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IppCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl IppCheck {
    /// Holds up to `rel * |lhs|`.
    pub fn holds(&self, rel: f64) -> bool {
        self.margin >= -rel * self.lhs.abs()
    }
}

pub fn verify_ipp(rho: &Field, p: f64, alpha: f64) -> Result<IppCheck> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::arg(format!("integration by parts needs p > 1, got {p}")));
    }
    let a = FractionalExponent::new(alpha)?;
    if a.value() > 2.0 || rho.values().iter().any(|v| *v <= 0.0) {
        return Err(Error::arg("integration by parts needs a strictly positive density"));
    }
    let lap = frac_laplacian_spectral(rho, a);
    let dx = rho.grid().dx();
    let lhs = dx
        * rho
            .values()
            .iter()
            .zip(lap.values())
            .map(|(r, l)| r.powf(p - 1.0) * l)
            .sum::<f64>();
    let half = rho.map(|v| v.powf(0.5 * p))?;
    let semi = hs_seminorm(&half, 0.5 * alpha)?;
    let rhs = 4.0 * (p - 1.0) / (p * p) * semi * semi;
    Ok(IppCheck {
        lhs,
        rhs,
        margin: lhs - rhs,
    })
}

/// `exp(g)` normalized to unit mass, where `g` is a periodic Fourier series with `modes`
/// terms and standard normal coefficients decaying like `m^{-4}`.
pub fn random_smooth_positive_field<R: Rng + ?Sized>(
    grid: &Arc<Grid>,
    modes: usize,
    rng: &mut R,
) -> Result<Field> {
    let l = grid.half_width();
    let coeffs: Vec<(f64, f64)> = (1..=modes)
        .map(|m| {
            let decay = (m as f64).powi(-4);
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            (a * decay, b * decay)
        })
        .collect();
    let f = Field::from_fn(grid.clone(), |x| {
        let g: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(j, (a, b))| {
                let k = (j + 1) as f64 * std::f64::consts::PI / l;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum();
        g.exp()
    })?;
    let mass = f.mass();
    f.scaled(1.0 / mass)
}

/// One interior observation of the `L^p` decay estimate
/// `d/dt (1/p)||rho||_p^p <= (-4(p-1)/(p^2 C ||rho||_{1/alpha}) + (p-1)/p) int rho^{p+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpDecayCheck {
    pub time: f64,
    /// Centered finite-difference rate of `(1/p)||rho||_p^p`.
    pub rate: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// The bracket multiplying `int rho^{p+1}` is positive: the estimate no longer forces
    /// decay.
    pub bracket_positive: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpDecayReport {
    pub p: f64,
    pub alpha: f64,
    pub c_hat: f64,
    pub checks: Vec<LpDecayCheck>,
}

impl LpDecayReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.holds).count()
    }

    pub fn flagged(&self) -> usize {
        self.checks.iter().filter(|c| c.bracket_positive).count()
    }
}

/// Checks the decay estimate at every interior observation of a trajectory, from its
/// snapshots. The rate uses the three-point centered difference on possibly uneven
/// spacing; the tolerance is twice its truncation error estimated from third differences,
/// plus roundoff.
pub fn verify_lp_decay(
    snapshots: &[SimState],
    p: f64,
    alpha: f64,
    c_hat: f64,
) -> Result<LpDecayReport> {
    if snapshots.len() < 3 {
        return Err(Error::arg(format!(
            "L^p decay check needs at least 3 observations, got {}",
            snapshots.len()
        )));
    }
    if !(p > 1.0 && c_hat > 0.0 && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg("L^p decay check needs p > 1, C > 0, 0 < alpha <= 1"));
    }
    let t: Vec<f64> = snapshots.iter().map(|s| s.time()).collect();
    let mut y = Vec::with_capacity(t.len());
    let mut high = Vec::with_capacity(t.len());
    let mut norm = Vec::with_capacity(t.len());
    for s in snapshots {
        let f = s.field();
        let dx = f.grid().dx();
        y.push(dx * f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>() / p);
        high.push(dx * f.values().iter().map(|v| v.abs().powf(p + 1.0)).sum::<f64>());
        norm.push(lp_norm(f, 1.0 / alpha)?);
    }
    let third = |i: usize| -> f64 {
        // divided difference on t[i-1..=i+2] (or the window shifted left at the end)
        let j = if i + 2 < t.len() {
            i - 1
        } else if i >= 2 {
            i - 2
        } else {
            return 0.0;
        };
        let d1: Vec<f64> = (j..j + 3).map(|k| (y[k + 1] - y[k]) / (t[k + 1] - t[k])).collect();
        let d2: Vec<f64> = (0..2)
            .map(|k| (d1[k + 1] - d1[k]) / (t[j + k + 2] - t[j + k]))
            .collect();
        6.0 * (d2[1] - d2[0]) / (t[j + 3] - t[j])
    };
    let mut checks = Vec::new();
    for i in 1..t.len() - 1 {
        let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        if !(h0 > 0.0 && h1 > 0.0) {
            return Err(Error::arg("observation times must increase strictly"));
        }
        let rate = -h1 / (h0 * (h0 + h1)) * y[i - 1]
            + (h1 - h0) / (h0 * h1) * y[i]
            + h0 / (h1 * (h0 + h1)) * y[i + 1];
        let bracket = -4.0 * (p - 1.0) / (p * p * c_hat * norm[i]) + (p - 1.0) / p;
        let bound = bracket * high[i];
        let truncation = h0 * h1 / 6.0 * third(i).abs();
        let roundoff = 1e-12 * y[i].abs() / h0.min(h1);
        let tolerance = 2.0 * truncation + roundoff;
        checks.push(LpDecayCheck {
            time: t[i],
            rate,
            bound,
            tolerance,
            bracket_positive: bracket > 0.0,
            holds: rate <= bound + tolerance,
        });
    }
    Ok(LpDecayReport {
        p,
        alpha,
        c_hat,
        checks,
    })
}
