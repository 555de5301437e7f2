//! Fractional Laplacian, chemotactic drift and right-hand sides.
//!
//! All derivatives are spectral. Odd symbols (`ik`, `i/k`) vanish on the Nyquist slot;
//! even symbols (`|k|^alpha`) keep it.

mod quadrature;

pub use quadrature::{frac_laplacian_quadrature, QuadratureScheme};

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{inverse_real, transform, Field, Grid};

/// Diffusion order `alpha` in `(0, 2]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalExponent(f64);

impl FractionalExponent {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 2.0 {
            Ok(FractionalExponent(alpha))
        } else {
            Err(Error::InvalidExponent(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalExponent {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        FractionalExponent::new(alpha)
    }
}

impl From<FractionalExponent> for f64 {
    fn from(a: FractionalExponent) -> f64 {
        a.0
    }
}

/// Chemotactic velocity `u = d_x c` with `-d_xx c = rho`, mean-free on the box.
#[derive(Clone, Debug)]
pub struct DriftField(Field);

impl DriftField {
    pub fn field(&self) -> &Field {
        &self.0
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn into_field(self) -> Field {
        self.0
    }
}

/// `|k|^alpha` on the grid's wavenumbers, in storage order.
pub fn diffusion_symbol(grid: &Grid, alpha: f64) -> Vec<f64> {
    grid.wavenumbers().iter().map(|k| k.abs().powf(alpha)).collect()
}

/// `ik`, with the Nyquist slot cleared.
pub fn derivative_symbol(grid: &Grid) -> Vec<Complex64> {
    let mut s: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| Complex64::new(0.0, k))
        .collect();
    s[grid.nyquist()] = Complex64::new(0.0, 0.0);
    s
}

/// `i/k`, with the zero mode and the Nyquist slot cleared.
pub fn drift_symbol(grid: &Grid) -> Vec<Complex64> {
    let mut s: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| {
            if k == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0 / k)
            }
        })
        .collect();
    s[grid.nyquist()] = Complex64::new(0.0, 0.0);
    s
}

/// 2/3-rule mask: 1 for `|j| <= n/3`, 0 above.
pub fn dealias_mask(grid: &Grid) -> Vec<f64> {
    let cut = grid.n() as i64 / 3;
    (0..grid.n())
        .map(|q| if grid.mode_index(q).abs() <= cut { 1.0 } else { 0.0 })
        .collect()
}

fn apply_symbol(f: &Field, symbol: impl Fn(usize) -> Complex64) -> Field {
    let mut spec = transform(f);
    for (q, c) in spec.coeffs_mut().iter_mut().enumerate() {
        *c *= symbol(q);
    }
    inverse_real(&spec)
}

/// `Lambda^alpha f` through the Fourier multiplier `|k|^alpha`.
pub fn frac_laplacian_spectral(f: &Field, alpha: FractionalExponent) -> Field {
    let sym = diffusion_symbol(f.grid(), alpha.value());
    apply_symbol(f, |q| Complex64::new(sym[q], 0.0))
}

/// Spectral derivative `d_x f`.
pub fn derivative(f: &Field) -> Field {
    let sym = derivative_symbol(f.grid());
    apply_symbol(f, |q| sym[q])
}

/// Mean-free drift: `u^ = i rho^ / k`, zero mode 0. Equivalently `u = -(1/2) sgn * rho + mean(rho) x`
/// corrected to zero average, the periodic counterpart of the whole-line convolution.
pub fn drift(rho: &Field) -> DriftField {
    let sym = drift_symbol(rho.grid());
    DriftField(apply_symbol(rho, |q| sym[q]))
}

fn pointwise(a: &Field, b: &[f64]) -> Field {
    let v = a.values().iter().zip(b).map(|(x, y)| x * y).collect();
    Field::from_parts(a.grid().clone(), v)
}

fn combine(parts: &[(f64, &Field)], grid: &Arc<Grid>) -> Field {
    let mut out = vec![0.0; grid.n()];
    for (c, f) in parts {
        for (o, v) in out.iter_mut().zip(f.values()) {
            *o += c * v;
        }
    }
    Field::from_parts(grid.clone(), out)
}

/// `-Lambda^alpha rho - chi d_x(rho u)`.
pub fn rhs_physical(rho: &Field, alpha: FractionalExponent, chi: f64) -> Field {
    let diff = frac_laplacian_spectral(rho, alpha);
    let u = drift(rho);
    let flux = derivative(&pointwise(rho, u.values()));
    let mut out = combine(&[(-1.0, &diff), (-chi, &flux)], rho.grid());
    clear_mean(&mut out);
    out
}

/// Self-similar frame at `alpha = 1`: `-Lambda u + d_y(y u) - chi d_y(u drift(u))`.
pub fn rhs_rescaled(u: &Field, alpha: FractionalExponent, chi: f64) -> Result<Field> {
    if alpha.value() != 1.0 {
        return Err(Error::arg(format!(
            "the rescaled frame is defined for alpha = 1 only, got {}",
            alpha.value()
        )));
    }
    let grid = u.grid();
    let diff = frac_laplacian_spectral(u, alpha);
    let conf = derivative(&pointwise(u, &grid.coords()));
    let w = drift(u);
    let flux = derivative(&pointwise(u, w.values()));
    let mut out = combine(&[(-1.0, &diff), (1.0, &conf), (-chi, &flux)], grid);
    clear_mean(&mut out);
    Ok(out)
}

/// Removes the roundoff-level mean left by the inverse transform of a mean-free spectrum.
fn clear_mean(f: &mut Field) {
    let n = f.len() as f64;
    let mean = f.values().iter().sum::<f64>() / n;
    let v: Vec<f64> = f.values().iter().map(|x| x - mean).collect();
    *f = Field::from_parts(f.grid().clone(), v);
}
