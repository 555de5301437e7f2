use super::FractionalExponent;
use crate::error::{Error, Result};
use crate::special::{c_alpha, gauss_legendre, hurwitz_zeta};
use crate::spectral::{Field, Grid};

/// Parameters of the singular-integral realization
/// `c_alpha * int_{h_min}^{h_max} (2f(x) - f(x+h) - f(x-h)) h^{-1-alpha} dh`.
///
/// With `h_max = 2L` the kernel is periodized, `K(h) = sum_{m>=0} (h + 2mL)^{-1-alpha}`
/// (a Hurwitz zeta tail), so the integral over one period accounts for every image of the
/// periodic field. Smaller `h_max` truncates the plain kernel. The part `[0, h_min]` is
/// replaced by its Taylor estimate from high-order finite differences of `f'' ` and `f''''`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureScheme {
    pub h_min: f64,
    pub h_max: f64,
    pub c_alpha: f64,
}

impl QuadratureScheme {
    pub fn new(h_min: f64, h_max: f64, c_alpha: f64) -> Result<Self> {
        if !(h_min > 0.0 && h_max > h_min && h_max.is_finite()) {
            return Err(Error::arg(format!(
                "quadrature cutoffs need 0 < h_min < h_max, got {h_min}, {h_max}"
            )));
        }
        if !(c_alpha > 0.0 && c_alpha.is_finite()) {
            return Err(Error::arg(format!("c_alpha must be positive, got {c_alpha}")));
        }
        Ok(QuadratureScheme {
            h_min,
            h_max,
            c_alpha,
        })
    }

    /// `h_min = dx/8`, `h_max = 2L` (periodized) and the standard normalization.
    pub fn for_grid(grid: &Grid, alpha: FractionalExponent) -> Self {
        QuadratureScheme {
            h_min: grid.dx() / 8.0,
            h_max: 2.0 * grid.half_width(),
            c_alpha: c_alpha(alpha.value()),
        }
    }
}

const GL_ORDER: usize = 8;
const D2: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
const D4: [f64; 5] = [91.0 / 8.0, -122.0 / 15.0, 169.0 / 60.0, -2.0 / 5.0, 7.0 / 240.0];

/// `Lambda^alpha f` by direct quadrature of the singular integral on the periodic extension.
/// Off-grid values `f(x +- h)` come from 8-point Lagrange interpolation.
pub fn frac_laplacian_quadrature(
    f: &Field,
    alpha: FractionalExponent,
    q: &QuadratureScheme,
) -> Result<Field> {
    let a = alpha.value();
    if a >= 2.0 {
        return Err(Error::arg(
            "the singular-integral form degenerates at alpha = 2; use the spectral operator",
        ));
    }
    let grid = f.grid();
    let n = grid.n();
    let mask = n - 1;
    let dx = grid.dx();
    let period = 2.0 * grid.half_width();
    let h_hi = q.h_max.min(period);
    let periodized = q.h_max >= period;
    let s = 1.0 + a;
    let v = f.values();

    let mut out = vec![0.0; n];

    // [0, h_min]: -f'' h^{2-a}/(2-a) - f'''' h^{4-a}/(12(4-a))
    let hm = q.h_min.min(h_hi);
    let c2 = hm.powf(2.0 - a) / (2.0 - a) / (dx * dx);
    let c4 = hm.powf(4.0 - a) / (12.0 * (4.0 - a)) / dx.powi(4);
    for (i, o) in out.iter_mut().enumerate() {
        let (mut d2, mut d4) = (D2[0] * v[i], D4[0] * v[i]);
        for j in 1..5 {
            let pair = v[(i + j) & mask] + v[(i + n - j) & mask];
            d2 += D2[j] * pair;
            d4 += D4[j] * pair;
        }
        *o = -c2 * d2 - c4 * d4;
    }

    let mut edges = vec![hm];
    let fine_end = (4.0 * dx).min(h_hi);
    while *edges.last().unwrap() * 2.0 < fine_end {
        let e = *edges.last().unwrap() * 2.0;
        edges.push(e);
    }
    if *edges.last().unwrap() < fine_end {
        edges.push(fine_end);
    }
    let start = *edges.last().unwrap();
    let panels = ((h_hi - start) / (2.0 * dx)).ceil() as usize;
    for p in 1..=panels {
        edges.push(start + (h_hi - start) * p as f64 / panels as f64);
    }

    let (gx, gw) = gauss_legendre(GL_ORDER);
    let mut g = vec![0.0; n];
    for win in edges.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        if hi <= lo {
            continue;
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (&xi, &wi) in gx.iter().zip(&gw) {
            let h = mid + half * xi;
            let mut kernel = h.powf(-s);
            if periodized {
                kernel += period.powf(-s) * hurwitz_zeta(s, 1.0 + h / period);
            }
            let weight = half * wi * kernel;
            g.iter_mut().for_each(|x| *x = 0.0);
            accumulate_shift(v, h / dx, &mut g);
            accumulate_shift(v, -h / dx, &mut g);
            for i in 0..n {
                out[i] += weight * (2.0 * v[i] - g[i]);
            }
        }
    }

    for o in out.iter_mut() {
        *o *= q.c_alpha;
    }
    Field::new(grid.clone(), out)
}

/// Adds `f(x_i + shift*dx)` for every node, interpolating on nodes `-3..=4` around the
/// base point.
fn accumulate_shift(v: &[f64], shift: f64, acc: &mut [f64]) {
    let n = v.len();
    let mask = n - 1;
    let m = shift.floor();
    let r = shift - m;
    let mut w = [0.0; 8];
    for (a, wa) in w.iter_mut().enumerate() {
        let pa = a as f64 - 3.0;
        let mut prod = 1.0;
        for b in 0..8 {
            if b != a {
                let pb = b as f64 - 3.0;
                prod *= (r - pb) / (pa - pb);
            }
        }
        *wa = prod;
    }
    let base = (m as i64).rem_euclid(n as i64) as usize;
    for (a, &wa) in w.iter().enumerate() {
        let off = (base + n + a - 3) & mask;
        for (i, x) in acc.iter_mut().enumerate() {
            *x += wa * v[(i + off) & mask];
        }
    }
}
