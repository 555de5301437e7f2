//! Norm and moment diagnostics, the auxiliary test function, global-existence and
//! blow-up criteria, blow-up detection and self-similar residuals.

mod criteria;
mod test_function;

pub use criteria::{
    check_blowup_criterion, check_global_smallness, choose_lambda, corrected_moment,
    corrected_moment_with, write_criteria_csv, BlowupCriterion, CriterionKind, CriterionReport,
};
pub use test_function::{build_test_function, default_beta, PhiProfile, TestFunction};

use std::io::{BufRead, Write};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sci;
use crate::spectral::{lp_norm, transform, Field, Grid};

/// `dx * sum |x_i| rho_i`.
pub fn first_moment(rho: &Field) -> f64 {
    let g = rho.grid();
    g.dx()
        * rho
            .values()
            .iter()
            .enumerate()
            .map(|(i, r)| g.x(i).abs() * r)
            .sum::<f64>()
}

/// Fraction of spectral energy carried by the top eighth of wavenumbers, `|j| >= 7n/16`.
/// Works on any coefficient normalization.
pub fn tail_fraction(coeffs: &[Complex64], grid: &Grid) -> f64 {
    let cut = 7 * grid.n() as i64 / 16;
    let (mut tail, mut total) = (0.0, 0.0);
    for (q, c) in coeffs.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if grid.mode_index(q).abs() >= cut {
            tail += e;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Test-function probe for the corrected moment `I_lambda`.
#[derive(Clone, Debug)]
pub struct MomentProbe {
    pub profile: PhiProfile,
    pub lambda: f64,
}

pub const DIAGNOSTICS_HEADER: &str =
    "time,mass,l2,l_inv_alpha,l_inf,first_moment,i_lambda,min_value,tail_fraction";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub mass: f64,
    pub l2: f64,
    /// `(dx sum |rho|^{1/alpha})^alpha`.
    pub l_inv_alpha: f64,
    pub l_inf: f64,
    pub first_moment: f64,
    /// Corrected moment, NaN when no probe is configured.
    pub i_lambda: f64,
    pub min_value: f64,
    pub tail_fraction: f64,
}

impl DiagnosticsRow {
    pub fn compute(time: f64, rho: &Field, alpha: f64, probe: Option<&MomentProbe>) -> Self {
        let spec = transform(rho);
        let tail = tail_fraction(spec.coeffs(), rho.grid());
        Self::with_tail(time, rho, alpha, probe, tail)
    }

    pub(crate) fn with_tail(
        time: f64,
        rho: &Field,
        alpha: f64,
        probe: Option<&MomentProbe>,
        tail: f64,
    ) -> Self {
        let dx = rho.grid().dx();
        let l_inv_alpha = if alpha == 1.0 {
            dx * rho.values().iter().map(|v| v.abs()).sum::<f64>()
        } else {
            let p = 1.0 / alpha;
            (dx * rho.values().iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(alpha)
        };
        let i_lambda = probe
            .and_then(|p| corrected_moment_with(rho, &p.profile, p.lambda).ok())
            .unwrap_or(f64::NAN);
        DiagnosticsRow {
            time,
            mass: rho.mass(),
            l2: lp_norm(rho, 2.0).unwrap_or(f64::NAN),
            l_inv_alpha,
            l_inf: lp_norm(rho, f64::INFINITY).unwrap_or(f64::NAN),
            first_moment: first_moment(rho),
            i_lambda,
            min_value: rho.min(),
            tail_fraction: tail,
        }
    }

    pub fn csv_line(&self) -> String {
        [
            self.time,
            self.mass,
            self.l2,
            self.l_inv_alpha,
            self.l_inf,
            self.first_moment,
            self.i_lambda,
            self.min_value,
            self.tail_fraction,
        ]
        .iter()
        .map(|v| sci(*v))
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::arg(format!("bad diagnostics row `{line}`: {e}")))?;
        if v.len() != 9 {
            return Err(Error::arg(format!(
                "diagnostics row has {} columns, expected 9",
                v.len()
            )));
        }
        Ok(DiagnosticsRow {
            time: v[0],
            mass: v[1],
            l2: v[2],
            l_inv_alpha: v[3],
            l_inf: v[4],
            first_moment: v[5],
            i_lambda: v[6],
            min_value: v[7],
            tail_fraction: v[8],
        })
    }
}

pub fn write_diagnostics_csv<W: Write>(rows: &[DiagnosticsRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn read_diagnostics_csv<R: BufRead>(input: R) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::arg(e.to_string()))?
        .unwrap_or_default();
    if header.trim() != DIAGNOSTICS_HEADER {
        return Err(Error::arg(format!("unexpected diagnostics header `{header}`")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::arg(e.to_string()))?;
        if !line.trim().is_empty() {
            rows.push(DiagnosticsRow::parse_csv_line(&line)?);
        }
    }
    Ok(rows)
}

/// Thresholds of the numerical blow-up diagnosis.
///
/// Growth is declared when `L^inf` exceeds `min(growth_factor, grid_cap_fraction * M / (dx
/// L^inf(0)))` times its initial value: on a grid, a nonnegative density of mass `M` can never
/// exceed `M/dx`, so a fixed factor alone may be unreachable at moderate resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub growth_factor: f64,
    pub grid_cap_fraction: f64,
    pub tail_threshold: f64,
    /// Steps allowed at `dt_min` with the tail condition active before giving up.
    pub refine_budget: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            growth_factor: 1e4,
            grid_cap_fraction: 0.25,
            tail_threshold: 0.1,
            refine_budget: 20_000,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.growth_factor > 1.0) {
            return Err(Error::Config("detector growth_factor must exceed 1".into()));
        }
        if !(self.grid_cap_fraction > 0.0 && self.grid_cap_fraction <= 1.0) {
            return Err(Error::Config("detector grid_cap_fraction must be in (0, 1]".into()));
        }
        if !(self.tail_threshold > 0.0 && self.tail_threshold < 1.0) {
            return Err(Error::Config("detector tail_threshold must be in (0, 1)".into()));
        }
        Ok(())
    }

    /// Effective growth factor for a run of mass `mass` on spacing `dx`.
    pub fn growth_threshold(&self, mass: f64, dx: f64, l_inf0: f64) -> f64 {
        let cap = self.grid_cap_fraction * mass / (dx * l_inf0);
        self.growth_factor.min(cap.max(1.0))
    }

    pub fn growth_reached(&self, l_inf: f64, l_inf0: f64, mass: f64, dx: f64) -> bool {
        l_inf > self.growth_threshold(mass, dx, l_inf0) * l_inf0
    }

    pub fn tail_reached(&self, tail: f64) -> bool {
        tail > self.tail_threshold
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detection {
    NotDetected,
    BlowupDetected,
    ResolutionLost,
}

/// Post-hoc reading of a diagnostics table: blow-up when one row shows both growth and an
/// under-resolved tail, resolution loss when the final row has the tail without the growth.
pub fn detect_blowup(rows: &[DiagnosticsRow], cfg: &DetectorConfig, dx: f64) -> Detection {
    let Some(first) = rows.first() else {
        return Detection::NotDetected;
    };
    let (l0, mass) = (first.l_inf, first.mass);
    let hit = rows
        .iter()
        .any(|r| cfg.growth_reached(r.l_inf, l0, mass, dx) && cfg.tail_reached(r.tail_fraction));
    if hit {
        return Detection::BlowupDetected;
    }
    let last = rows.last().unwrap();
    if !last.tail_fraction.is_finite() || cfg.tail_reached(last.tail_fraction) {
        Detection::ResolutionLost
    } else {
        Detection::NotDetected
    }
}

/// `||u1 - u2||_1 / M`.
pub fn selfsimilar_residual(u1: &Field, u2: &Field) -> Result<f64> {
    u1.ensure_same_grid(u2)?;
    let mass = u1.mass().abs().max(u2.mass().abs());
    if !(mass > 0.0) {
        return Err(Error::arg("residual of zero-mass fields is undefined"));
    }
    let dx = u1.grid().dx();
    let d: f64 = u1
        .values()
        .iter()
        .zip(u2.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(dx * d / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::derivative;
    use crate::spectral::{make_grid, synthesize_initial, InitialFamily};

    #[test]
    fn diagnostics_of_gaussian() {
        let g = make_grid(1024, 20.0).unwrap();
        let rho = synthesize_initial(InitialFamily::Gaussian, 2.0, 1.0, 0.0, &g).unwrap();
        let row = DiagnosticsRow::compute(0.5, &rho, 1.0, None);
        assert!((row.mass - 2.0).abs() < 1e-14);
        assert_eq!(row.l_inv_alpha, row.mass);
        assert!(row.i_lambda.is_nan());
        // trapezoid error at the kink of |x| is O(dx^2)
        let exact = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((row.first_moment - exact).abs() < g.dx() * g.dx());
        assert!(row.tail_fraction < 1e-20);
        let half = DiagnosticsRow::compute(0.0, &rho, 0.5, None);
        assert!((half.l_inv_alpha - half.l2).abs() < 1e-13 * half.l2);
    }

    #[test]
    fn grid_delta_has_flat_spectrum() {
        let g = make_grid(256, 10.0).unwrap();
        let mut v = vec![0.0; 256];
        v[128] = 1.0;
        let f = Field::new(g.clone(), v).unwrap();
        let t = tail_fraction(transform(&f).coeffs(), &g);
        assert!((t - 33.0 / 256.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let g = make_grid(64, 10.0).unwrap();
        let rho = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g).unwrap();
        let rows = vec![
            DiagnosticsRow::compute(0.0, &rho, 0.5, None),
            DiagnosticsRow::compute(0.1, &rho, 0.5, None),
        ];
        let mut buf = Vec::new();
        write_diagnostics_csv(&rows, &mut buf).unwrap();
        let back = read_diagnostics_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].time, 0.1);
        assert_eq!(back[0].l2, rows[0].l2);
        assert!(back[0].i_lambda.is_nan());
        assert!(read_diagnostics_csv(&b"time,mass\n"[..]).is_err());
    }

    #[test]
    fn detector_logic() {
        let cfg = DetectorConfig::default();
        let row = |l_inf: f64, tail: f64| DiagnosticsRow {
            time: 0.0,
            mass: 1.0,
            l2: 1.0,
            l_inv_alpha: 1.0,
            l_inf,
            first_moment: 1.0,
            i_lambda: f64::NAN,
            min_value: 0.0,
            tail_fraction: tail,
        };
        let dx = 1e-3;
        // cap = 0.25 / (1e-3 * 1) = 250
        assert_eq!(cfg.growth_threshold(1.0, dx, 1.0), 250.0);
        let calm = [row(1.0, 0.0), row(0.5, 0.0)];
        assert_eq!(detect_blowup(&calm, &cfg, dx), Detection::NotDetected);
        let blow = [row(1.0, 0.0), row(300.0, 0.2)];
        assert_eq!(detect_blowup(&blow, &cfg, dx), Detection::BlowupDetected);
        let lost = [row(1.0, 0.0), row(2.0, 0.2)];
        assert_eq!(detect_blowup(&lost, &cfg, dx), Detection::ResolutionLost);
        let grow_only = [row(1.0, 0.0), row(300.0, 0.01)];
        assert_eq!(detect_blowup(&grow_only, &cfg, dx), Detection::NotDetected);
        assert_eq!(detect_blowup(&[], &cfg, dx), Detection::NotDetected);
    }

    #[test]
    fn residual_bounds() {
        let g = make_grid(1024, 20.0).unwrap();
        let u = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g).unwrap();
        assert_eq!(selfsimilar_residual(&u, &u).unwrap(), 0.0);
        let dx = g.dx();
        let shifted = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.5 * dx, &g).unwrap();
        let r = selfsimilar_residual(&u, &shifted).unwrap();
        let du: f64 = derivative(&u).values().iter().map(|v| v.abs()).sum::<f64>() * dx;
        assert!(r > 0.0 && r <= dx * du + 1e-12);
        let other = make_grid(512, 20.0).unwrap();
        let v = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &other).unwrap();
        assert!(matches!(selfsimilar_residual(&u, &v), Err(Error::GridMismatch)));
    }
}
