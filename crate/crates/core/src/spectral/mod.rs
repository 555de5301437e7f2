//! Periodic grid on a truncated line, real fields, Fourier transforms and norms.
//!
//! The box is `[-L, L)` sampled at `x_i = -L + i*dx`, `dx = 2L/n`. Transforms use
//!
//! ```text
//! f^(k_q) = dx * sum_i f_i exp(-i k_q x_i)
//! f_i     = 1/(2L) * sum_q f^(k_q) exp(i k_q x_i)
//! ```
//!
//! so `f^` approximates the continuous transform `int f(x) exp(-ikx) dx` and Parseval
//! reads `dx * sum |f_i|^2 = 1/(2L) * sum |f^_q|^2`. Coefficients are stored in FFT
//! order: slot `q` holds `k = pi*q/L` for `q < n/2` and `k = pi*(q - n)/L` otherwise, so
//! the Nyquist slot `n/2` carries the negative wavenumber `-pi*n/(2L)`.

mod initial;

pub use initial::{synthesize_initial, InitialFamily};

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sci;

pub struct Grid {
    n: usize,
    half_width: f64,
    dx: f64,
    wavenumbers: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

/// Builds a grid of `n` points on `[-L, L)`.
pub fn make_grid(n: usize, half_width: f64) -> Result<Arc<Grid>> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "n = {n} must be a power of two >= 16"
        )));
    }
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "half width L = {half_width} must be positive and finite"
        )));
    }
    let dx = 2.0 * half_width / n as f64;
    let wavenumbers = (0..n)
        .map(|q| PI * signed_index(q, n) as f64 / half_width)
        .collect();
    let mut planner = FftPlanner::new();
    Ok(Arc::new(Grid {
        n,
        half_width,
        dx,
        wavenumbers,
        fft: planner.plan_fft_forward(n),
        ifft: planner.plan_fft_inverse(n),
    }))
}

fn signed_index(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

impl Grid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Wavenumbers in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Signed mode index `j` of storage slot `q`, in `-n/2..n/2`.
    pub fn mode_index(&self, q: usize) -> i64 {
        signed_index(q, self.n)
    }

    /// Storage slot of the Nyquist mode.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Largest positive wavenumber, `pi*(n/2 - 1)/L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * (self.n / 2 - 1) as f64 / self.half_width
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Index of the node mirrored through `x = 0`.
    pub fn mirror(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.half_width == other.half_width)
    }

    /// Unnormalized forward DFT in place.
    pub(crate) fn dft(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fft.process_with_scratch(buf, scratch);
    }

    /// Unnormalized inverse DFT in place.
    pub(crate) fn idft(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.ifft.process_with_scratch(buf, scratch);
    }

    pub(crate) fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Real function sampled on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::arg(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {i}")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.n()];
        Field { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rectangle-rule integral `dx * sum f_i`.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Field> {
        self.map(|v| c * v)
    }

    /// Largest `|f_i - f_{-i}|`, the distance from evenness about `x = 0`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.values[i] - self.values[self.grid.mirror(i)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Field { grid, values }
    }

    /// Writes `x,value` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", sci(self.grid.x(i)), sci(*v))?;
        }
        Ok(())
    }
}

/// Fourier coefficients of a field, in FFT storage order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::arg(format!(
                "spectrum has {} coefficients, grid has {} points",
                coeffs.len(),
                grid.n()
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Multiplies every coefficient by `m(k)`.
    pub fn apply(&mut self, m: impl Fn(f64) -> Complex64) {
        for (c, &k) in self.coeffs.iter_mut().zip(self.grid.wavenumbers()) {
            *c *= m(k);
        }
    }

    /// Multiplies by an odd symbol and clears the Nyquist slot, whose partner mode is absent.
    pub fn apply_odd(&mut self, m: impl Fn(f64) -> Complex64) {
        self.apply(m);
        let nyq = self.grid.nyquist();
        self.coeffs[nyq] = Complex64::new(0.0, 0.0);
    }
}

/// `(-1)^q`, the phase `exp(i k_q L)` that shifts the DFT origin to `x = -L`.
fn phase(q: usize) -> f64 {
    if q.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn transform(f: &Field) -> Spectrum {
    let grid = f.grid.clone();
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut scratch = grid.scratch();
    grid.dft(&mut buf, &mut scratch);
    let dx = grid.dx();
    for (q, c) in buf.iter_mut().enumerate() {
        *c *= dx * phase(q);
    }
    Spectrum { grid, coeffs: buf }
}

/// Inverse transform, keeping the real part.
pub fn inverse_transform(s: &Spectrum) -> Result<Field> {
    let f = inverse_real(s);
    Field::new(f.grid, f.values)
}

/// Inverse transform without the finiteness check, for spectra of finite fields.
pub(crate) fn inverse_real(s: &Spectrum) -> Field {
    let grid = s.grid.clone();
    let scale = 1.0 / (2.0 * grid.half_width());
    let mut buf: Vec<Complex64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(q, &c)| c * (phase(q) * scale))
        .collect();
    let mut scratch = grid.scratch();
    grid.idft(&mut buf, &mut scratch);
    Field::from_parts(grid, buf.iter().map(|c| c.re).collect())
}

/// Discrete `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::arg(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let dx = f.grid.dx();
    if p == 1.0 {
        return Ok(dx * f.values.iter().map(|v| v.abs()).sum::<f64>());
    }
    if p == 2.0 {
        return Ok((dx * f.values.iter().map(|v| v * v).sum::<f64>()).sqrt());
    }
    let sum: f64 = f.values.iter().map(|v| v.abs().powf(p)).sum();
    Ok((dx * sum).powf(1.0 / p))
}

/// Homogeneous seminorm `(1/(2L) * sum |k|^{2s} |f^|^2)^{1/2}`, equal to `||Lambda^s f||_2`.
pub fn hs_seminorm(f: &Field, s: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::arg(format!("seminorm order s = {s} outside (0, 1]")));
    }
    let spec = transform(f);
    let grid = &f.grid;
    let sum: f64 = spec
        .coeffs
        .iter()
        .zip(grid.wavenumbers())
        .map(|(c, &k)| k.abs().powf(2.0 * s) * c.norm_sqr())
        .sum();
    Ok((sum / (2.0 * grid.half_width())).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Arc<Grid>, s: f64) -> Field {
        let norm = 1.0 / (s * (2.0 * PI).sqrt());
        Field::from_fn(grid.clone(), |x| norm * (-x * x / (2.0 * s * s)).exp()).unwrap()
    }

    #[test]
    fn grid_basics() {
        let g = make_grid(16, 8.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.wavenumbers()[1], PI / 8.0);
        assert_eq!(g.wavenumbers()[8], -PI);
        assert_eq!(g.wavenumbers().iter().filter(|&&k| k == 0.0).count(), 1);
        assert_eq!(g.dx() * g.n() as f64, 2.0 * g.half_width());
        assert!(make_grid(15, 8.0).is_err());
        assert!(make_grid(8, 8.0).is_err());
        assert!(make_grid(16, 0.0).is_err());
        assert!(make_grid(16, -1.0).is_err());
        let g = make_grid(1024, 20.0).unwrap();
        let kmax = g.wavenumbers().iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(kmax, PI * 511.0 / 20.0);
        assert_eq!(g.max_wavenumber(), kmax);
    }

    #[test]
    fn mirror_pairs_nodes() {
        let g = make_grid(16, 8.0).unwrap();
        for i in 1..16 {
            assert_eq!(g.x(g.mirror(i)), -g.x(i));
        }
        assert_eq!(g.mirror(0), 0);
    }

    #[test]
    fn field_rejects_nonfinite() {
        let g = make_grid(16, 8.0).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(Field::new(g.clone(), v).is_err());
        assert!(Field::new(g, vec![0.0; 15]).is_err());
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = make_grid(64, 5.0).unwrap();
        let f = Field::from_fn(g.clone(), |_| 3.0).unwrap();
        let s = transform(&f);
        assert!((s.coeffs()[0].re - 30.0).abs() < 1e-12);
        for c in &s.coeffs()[1..] {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_hits_two_modes() {
        let g = make_grid(64, 5.0).unwrap();
        let k = g.wavenumbers()[5];
        let f = Field::from_fn(g.clone(), |x| (k * x).cos()).unwrap();
        let s = transform(&f);
        for (q, c) in s.coeffs().iter().enumerate() {
            if q == 5 || q == 59 {
                // f^ = L at +-k for a unit cosine
                assert!((c.norm() - 5.0).abs() < 1e-12, "slot {q}: {c}");
            } else {
                assert!(c.norm() < 1e-12, "slot {q}: {c}");
            }
        }
    }

    #[test]
    fn gaussian_transform_matches_continuous() {
        let g = make_grid(512, 20.0).unwrap();
        let s = transform(&gaussian(&g, 1.0));
        for (c, &k) in s.coeffs().iter().zip(g.wavenumbers()) {
            let exact = (-k * k / 2.0).exp();
            assert!((c - Complex64::new(exact, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn lp_norms() {
        let g = make_grid(16, 8.0).unwrap();
        let ind = Field::from_fn(g.clone(), |x| if (-1.0..1.0).contains(&x) { 1.0 } else { 0.0 })
            .unwrap();
        for p in [1.0, 1.5, 2.0, 3.0, 7.0] {
            let v = lp_norm(&ind, p).unwrap();
            assert!((v - 2f64.powf(1.0 / p)).abs() < 1e-14, "p={p}: {v}");
        }
        assert_eq!(lp_norm(&ind, f64::INFINITY).unwrap(), 1.0);
        assert!(lp_norm(&ind, 0.5).is_err());
        assert!(lp_norm(&ind, f64::NAN).is_err());

        let g = make_grid(1024, 20.0).unwrap();
        let gs = gaussian(&g, 1.0);
        assert!((lp_norm(&gs, 1.0).unwrap() - gs.mass()).abs() < 1e-14);
        let want = (1.0 / (2.0 * PI.sqrt())).sqrt();
        assert!((lp_norm(&gs, 2.0).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn seminorm_cases() {
        let g = make_grid(128, 10.0).unwrap();
        let c = Field::from_fn(g.clone(), |_| 2.5).unwrap();
        assert!(hs_seminorm(&c, 0.5).unwrap() < 1e-12);
        let k = g.wavenumbers()[7];
        let f = Field::from_fn(g.clone(), |x| (k * x).cos()).unwrap();
        for s in [0.25, 0.5, 1.0] {
            let hs = hs_seminorm(&f, s).unwrap();
            let want = k.abs().powf(s) * lp_norm(&f, 2.0).unwrap();
            assert!((hs - want).abs() < 1e-12 * want);
        }
        assert!(hs_seminorm(&f, 0.0).is_err());
        assert!(hs_seminorm(&f, 1.5).is_err());
    }

    #[test]
    fn seminorm_of_gaussian_matches_direct_sum() {
        // Direct O(n^2) evaluation of the coefficients, no FFT involved.
        let g = make_grid(256, 12.0).unwrap();
        let f = gaussian(&g, 1.0);
        let mut sum = 0.0;
        for &k in g.wavenumbers() {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in f.values().iter().enumerate() {
                let a = -k * g.x(i);
                re += v * a.cos();
                im += v * a.sin();
            }
            sum += k.abs() * g.dx() * g.dx() * (re * re + im * im);
        }
        let want = (sum / 24.0).sqrt();
        let got = hs_seminorm(&f, 0.5).unwrap();
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
    }

    #[test]
    fn csv_layout() {
        let g = make_grid(16, 8.0).unwrap();
        let f = Field::from_fn(g, |x| x / 3.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,value");
        assert_eq!(lines.len(), 17);
        let parts: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(parts[0].parse::<f64>().unwrap(), -8.0);
        assert_eq!(parts[1].parse::<f64>().unwrap(), -8.0 / 3.0);
    }
}
