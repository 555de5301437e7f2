//! Time evolution by an integrating-factor Heun scheme: the diffusion multiplier
//! `exp(-|k|^alpha dt)` is applied exactly and the transport term is advanced explicitly.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{tail_fraction, DetectorConfig, DiagnosticsRow, MomentProbe};
use crate::error::{Error, Result};
use crate::operators::{
    dealias_mask, derivative_symbol, diffusion_symbol, drift_symbol, FractionalExponent,
};
use crate::spectral::{Field, Grid};

/// Physical variables `(t, x)` or self-similar variables `(tau, y)` with
/// `u(tau, y) = (1+t) rho(t, (1+t) y)`, `tau = ln(1+t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Physical,
    Rescaled,
}

impl Frame {
    pub fn as_str(self) -> &'static str {
        match self {
            Frame::Physical => "physical",
            Frame::Rescaled => "rescaled",
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "physical" => Ok(Frame::Physical),
            "rescaled" => Ok(Frame::Rescaled),
            _ => Err(Error::arg(format!("unknown frame `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    frame: Frame,
    time: f64,
    field: Field,
    alpha: FractionalExponent,
    chi: f64,
}

impl SimState {
    /// The rescaled frame is only defined for `alpha = 1`, where the scaling of the
    /// diffusion matches the scaling of the aggregation term.
    pub fn new(
        frame: Frame,
        time: f64,
        field: Field,
        alpha: FractionalExponent,
        chi: f64,
    ) -> Result<Self> {
        if !time.is_finite() {
            return Err(Error::arg(format!("time must be finite, got {time}")));
        }
        if !(chi.is_finite() && chi >= 0.0) {
            return Err(Error::arg(format!("chi must be finite and nonnegative, got {chi}")));
        }
        if frame == Frame::Rescaled && alpha.value() != 1.0 {
            return Err(Error::InvalidExponent(alpha.value()));
        }
        Ok(SimState {
            frame,
            time,
            field,
            alpha,
            chi,
        })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn alpha(&self) -> FractionalExponent {
        self.alpha
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    fn with(&self, time: f64, field: Field) -> SimState {
        SimState {
            time,
            field,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    /// Apply the 2/3 truncation to the transport term.
    pub dealias: bool,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            safety: 0.1,
            dt_min: 1e-7,
            dt_max: 1e-2,
            max_steps: 10_000_000,
            dealias: false,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Config(format!(
                "control.safety must be in (0, 1], got {}",
                self.safety
            )));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return Err(Error::Config(format!(
                "control needs 0 < dt_min <= dt_max, got {} and {}",
                self.dt_min, self.dt_max
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("control.max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    BlowupDetected,
    ResolutionLost,
    StepFloor,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::BlowupDetected => "blowup_detected",
            Outcome::ResolutionLost => "resolution_lost",
            Outcome::StepFloor => "step_floor",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "completed" => Ok(Outcome::Completed),
            "blowup_detected" => Ok(Outcome::BlowupDetected),
            "resolution_lost" => Ok(Outcome::ResolutionLost),
            "step_floor" => Ok(Outcome::StepFloor),
            _ => Err(Error::arg(format!("unknown outcome `{s}`"))),
        }
    }
}

/// What to record during `advance`. Observations happen at `t0 + m*interval`, at the horizon
/// and at the halt time of an early stop.
#[derive(Clone, Debug)]
pub struct ObservationPlan {
    pub interval: f64,
    pub detector: DetectorConfig,
    pub probe: Option<MomentProbe>,
    pub keep_snapshots: bool,
}

impl ObservationPlan {
    pub fn new(interval: f64) -> Self {
        ObservationPlan {
            interval,
            detector: DetectorConfig::default(),
            probe: None,
            keep_snapshots: true,
        }
    }
}

/// Callback invoked at every observation.
pub trait Observer {
    fn observe(&mut self, state: &SimState, row: &DiagnosticsRow) -> Result<()>;
}

impl Observer for () {
    fn observe(&mut self, _: &SimState, _: &DiagnosticsRow) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// States at observation times (empty unless snapshots are kept).
    pub snapshots: Vec<SimState>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub outcome: Outcome,
    /// Short machine-readable reason for the halt.
    pub halt_reason: &'static str,
    pub final_state: SimState,
    pub steps: usize,
    /// Some observation had `min < -1e-6 max`.
    pub degraded: bool,
    /// Largest relative mass deviation seen at an observation.
    pub max_mass_drift: f64,
    pub smallest_dt: f64,
}

impl Trajectory {
    pub fn halt_time(&self) -> f64 {
        self.final_state.time
    }
}

/// Right-hand side machinery on raw DFT coefficients. Every multiplier is diagonal, so the
/// phase of the centered transform never enters.
struct Stepper {
    grid: Arc<Grid>,
    frame: Frame,
    chi: f64,
    diffusion: Vec<f64>,
    drift: Vec<Complex64>,
    deriv: Vec<Complex64>,
    mask: Option<Vec<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    rho: Vec<f64>,
    velocity: Vec<f64>,
    nonlinear: Vec<Complex64>,
    predicted: Vec<Complex64>,
    next: Vec<Complex64>,
}

impl Stepper {
    fn new(state: &SimState, dealias: bool) -> Self {
        let grid = state.field.grid().clone();
        let n = grid.n();
        let alpha = match state.frame {
            Frame::Physical => state.alpha.value(),
            Frame::Rescaled => 1.0,
        };
        let velocity = match state.frame {
            Frame::Physical => vec![0.0; n],
            Frame::Rescaled => grid.coords().iter().map(|y| -y).collect(),
        };
        Stepper {
            frame: state.frame,
            chi: state.chi,
            diffusion: diffusion_symbol(&grid, alpha),
            drift: drift_symbol(&grid),
            deriv: derivative_symbol(&grid),
            mask: dealias.then(|| dealias_mask(&grid)),
            buf: vec![Complex64::default(); n],
            scratch: grid.scratch(),
            rho: vec![0.0; n],
            velocity,
            nonlinear: vec![Complex64::default(); n],
            predicted: vec![Complex64::default(); n],
            next: vec![Complex64::default(); n],
            grid,
        }
    }

    fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut hat: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.dft(&mut hat, &mut self.scratch);
        hat
    }

    /// Writes `N(hat) = -d/dx (rho v)` into `out`, leaves `rho` in `self.rho` and returns
    /// `max |v|`. One complex inverse transform yields `rho` and the drift together.
    fn eval(&mut self, hat: &[Complex64], out: &mut [Complex64]) -> f64 {
        let n = self.grid.n();
        let inv_n = 1.0 / n as f64;
        for q in 0..n {
            let h = hat[q];
            self.buf[q] = h + Complex64::i() * (self.drift[q] * h);
        }
        self.grid.idft(&mut self.buf, &mut self.scratch);
        let mut vmax = 0.0f64;
        let rescaled = self.frame == Frame::Rescaled;
        for i in 0..n {
            let z = self.buf[i] * inv_n;
            let r = z.re;
            let mut v = self.chi * z.im;
            if rescaled {
                v -= self.grid.x(i);
            }
            self.rho[i] = r;
            self.velocity[i] = v;
            vmax = vmax.max(v.abs());
            self.buf[i] = Complex64::new(r * v, 0.0);
        }
        self.grid.dft(&mut self.buf, &mut self.scratch);
        for q in 0..n {
            let mut v = -(self.deriv[q] * self.buf[q]);
            if let Some(m) = &self.mask {
                v *= m[q];
            }
            out[q] = v;
        }
        vmax
    }

    /// One IF-Heun step from `hat` with `n0 = N(hat)`; the result lands in `self.next`.
    /// Returns false if it is not finite.
    fn step(&mut self, hat: &[Complex64], n0: &[Complex64], dt: f64) -> bool {
        let n = self.grid.n();
        let e: Vec<f64> = self.diffusion.iter().map(|d| (-d * dt).exp()).collect();
        let mut pred = std::mem::take(&mut self.predicted);
        for q in 0..n {
            pred[q] = (hat[q] + n0[q] * dt) * e[q];
        }
        let mut n1 = std::mem::take(&mut self.nonlinear);
        self.eval(&pred, &mut n1);
        let mut ok = true;
        for q in 0..n {
            let v = hat[q] * e[q] + (n0[q] * e[q] + n1[q]) * (0.5 * dt);
            ok &= v.re.is_finite() && v.im.is_finite();
            self.next[q] = v;
        }
        self.predicted = pred;
        self.nonlinear = n1;
        ok
    }

    fn field_from(&mut self, hat: &[Complex64]) -> Field {
        let n = self.grid.n();
        self.buf.copy_from_slice(hat);
        self.grid.idft(&mut self.buf, &mut self.scratch);
        let inv_n = 1.0 / n as f64;
        let values = self.buf.iter().map(|z| z.re * inv_n).collect();
        Field::from_parts(self.grid.clone(), values)
    }
}

fn transport_speed(state: &SimState) -> f64 {
    let mut s = Stepper::new(state, false);
    let hat = s.forward(state.field.values());
    let mut out = vec![Complex64::default(); hat.len()];
    s.eval(&hat, &mut out)
}

/// `safety * dx / max|v|` without clamping; infinite when nothing moves.
pub fn cfl_dt_unclamped(state: &SimState, safety: f64) -> f64 {
    let v = transport_speed(state);
    if v > 0.0 {
        safety * state.field.grid().dx() / v
    } else {
        f64::INFINITY
    }
}

/// CFL step for the transport velocity (chemotactic drift, plus the confining `-y` in the
/// rescaled frame), clamped to `[dt_min, dt_max]`.
pub fn cfl_dt(state: &SimState, control: &StepControl) -> f64 {
    cfl_dt_unclamped(state, control.safety).clamp(control.dt_min, control.dt_max)
}

/// One integrating-factor Heun step of size `dt`.
pub fn step(state: &SimState, dt: f64) -> Result<SimState> {
    step_with(state, dt, false)
}

pub fn step_with(state: &SimState, dt: f64, dealias: bool) -> Result<SimState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::arg(format!("step size must be positive, got {dt}")));
    }
    let mut s = Stepper::new(state, dealias);
    let hat = s.forward(state.field.values());
    let mut n0 = vec![Complex64::default(); hat.len()];
    s.eval(&hat, &mut n0);
    if !s.step(&hat, &n0, dt) {
        return Err(Error::NonFinite("state after step".into()));
    }
    let next = std::mem::take(&mut s.next);
    let field = s.field_from(&next);
    if field.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state after step".into()));
    }
    Ok(state.with(state.time + dt, field))
}

pub fn advance(
    state: &SimState,
    horizon: f64,
    control: &StepControl,
    plan: &ObservationPlan,
) -> Result<Trajectory> {
    advance_with(state, horizon, control, plan, &mut ())
}

/// Evolves until `horizon` or an early stop.
///
/// Stop rules, checked once per step before stepping:
/// - non-finite values: `resolution_lost`;
/// - `L^inf` growth and spectral tail both above their thresholds: `blowup_detected`;
/// - tail above threshold: refinement, `dt` halves every step down to `dt_min`; more than
///   `refine_budget` such steps at `dt_min`: `resolution_lost`;
/// - CFL step below `dt_min` outside refinement, or `max_steps` reached: `step_floor`.
pub fn advance_with(
    state: &SimState,
    horizon: f64,
    control: &StepControl,
    plan: &ObservationPlan,
    observer: &mut dyn Observer,
) -> Result<Trajectory> {
    control.validate()?;
    plan.detector.validate()?;
    if !(horizon >= state.time && horizon.is_finite()) {
        return Err(Error::arg(format!(
            "horizon {horizon} must not precede the state time {}",
            state.time
        )));
    }
    if !(plan.interval > 0.0) {
        return Err(Error::arg("observation interval must be positive"));
    }
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        outcome: Outcome::Completed,
        halt_reason: "horizon",
        final_state: state.clone(),
        steps: 0,
        degraded: false,
        max_mass_drift: 0.0,
        smallest_dt: f64::INFINITY,
    };
    if horizon == state.time {
        return Ok(traj);
    }

    let alpha = state.alpha.value();
    let grid = state.field.grid().clone();
    let n = grid.n();
    let dx = grid.dx();
    let t0 = state.time;
    let mass0 = state.field.mass();
    let l_inf0 = state
        .field
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let det = &plan.detector;

    let mut s = Stepper::new(state, control.dealias);
    let mut hat = s.forward(state.field.values());
    let mut n0 = vec![Complex64::default(); n];
    let mut time = t0;
    let mut obs_index = 0usize;
    let obs_time = |m: usize| (t0 + m as f64 * plan.interval).min(horizon);
    let mut next_obs = obs_time(0);
    let mut last_observed = f64::NAN;
    let mut refining = false;
    let mut dt_prev = control.dt_max;
    let mut floor_steps = 0usize;

    let mut record = |time: f64, rho: &[f64], tail: f64, traj: &mut Trajectory| -> Result<()> {
        let field = Field::from_parts(grid.clone(), rho.to_vec());
        let row = DiagnosticsRow::with_tail(time, &field, alpha, plan.probe.as_ref(), tail);
        if row.min_value < -1e-6 * field.max() {
            traj.degraded = true;
        }
        if mass0 != 0.0 {
            traj.max_mass_drift = traj.max_mass_drift.max(((row.mass - mass0) / mass0).abs());
        }
        let snap = state.with(time, field);
        observer.observe(&snap, &row)?;
        traj.diagnostics.push(row);
        if plan.keep_snapshots {
            traj.snapshots.push(snap);
        }
        Ok(())
    };

    loop {
        let vmax = s.eval(&hat, &mut n0);
        if s.rho.iter().any(|v| !v.is_finite()) || !vmax.is_finite() {
            traj.outcome = Outcome::ResolutionLost;
            traj.halt_reason = "non_finite";
            break;
        }
        let tail = tail_fraction(&hat, &grid);
        let l_inf = s.rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        if time >= next_obs {
            record(time, &s.rho, tail, &mut traj)?;
            last_observed = time;
            obs_index += 1;
            next_obs = obs_time(obs_index);
            while next_obs <= time && time < horizon {
                obs_index += 1;
                next_obs = obs_time(obs_index);
            }
        }
        if time >= horizon {
            break;
        }

        let tail_hit = det.tail_reached(tail);
        let mut halt = None;
        if tail_hit && det.growth_reached(l_inf, l_inf0, mass0, dx) {
            halt = Some((Outcome::BlowupDetected, "growth_and_tail"));
        } else if traj.steps >= control.max_steps {
            halt = Some((Outcome::StepFloor, "max_steps"));
        }

        let dt_cfl = if vmax > 0.0 {
            control.safety * dx / vmax
        } else {
            f64::INFINITY
        };
        let mut dt = 0.0;
        if halt.is_none() {
            if tail_hit {
                let base = if refining {
                    dt_prev
                } else {
                    dt_cfl.min(control.dt_max)
                };
                refining = true;
                dt = (0.5 * base).min(dt_cfl).max(control.dt_min);
                if dt <= control.dt_min {
                    floor_steps += 1;
                    if floor_steps > det.refine_budget {
                        halt = Some((Outcome::ResolutionLost, "refine_budget"));
                    }
                }
            } else {
                refining = false;
                floor_steps = 0;
                if dt_cfl < control.dt_min {
                    halt = Some((Outcome::StepFloor, "cfl_below_dt_min"));
                } else {
                    dt = dt_cfl.min(control.dt_max);
                }
            }
        }
        if let Some((outcome, reason)) = halt {
            traj.outcome = outcome;
            traj.halt_reason = reason;
            if last_observed != time {
                record(time, &s.rho, tail, &mut traj)?;
            }
            break;
        }

        let mut land = false;
        if dt >= next_obs - time {
            dt = next_obs - time;
            land = true;
        }
        if !s.step(&hat, &n0, dt) {
            traj.outcome = Outcome::ResolutionLost;
            traj.halt_reason = "non_finite";
            if last_observed != time {
                record(time, &s.rho, tail, &mut traj)?;
            }
            break;
        }
        std::mem::swap(&mut hat, &mut s.next);
        time = if land { next_obs } else { time + dt };
        dt_prev = dt;
        traj.smallest_dt = traj.smallest_dt.min(dt);
        traj.steps += 1;
    }

    let field = s.field_from(&hat);
    traj.final_state = state.with(time, field);
    Ok(traj)
}

/// Maps a physical-frame density at time `t` to self-similar variables,
/// `u(y) = (1+t) rho((1+t) y)`, by cubic interpolation on the same grid. Points whose
/// preimage leaves the box get 0.
pub fn to_rescaled(rho: &Field, t: f64) -> Result<Field> {
    if !(t > -1.0 && t.is_finite()) {
        return Err(Error::arg(format!("rescaling needs t > -1, got {t}")));
    }
    let grid = rho.grid();
    let (n, dx, l) = (grid.n(), grid.dx(), grid.half_width());
    let v = rho.values();
    let s = 1.0 + t;
    let at = |j: i64| -> f64 {
        if (0..n as i64).contains(&j) {
            v[j as usize]
        } else {
            0.0
        }
    };
    Field::from_fn(grid.clone(), |y| {
        let x = s * y;
        let r = (x + l) / dx;
        if r < 0.0 || r > (n - 1) as f64 {
            return 0.0;
        }
        let j = r.floor() as i64;
        let f = r - j as f64;
        let (p0, p1, p2, p3) = (at(j - 1), at(j), at(j + 1), at(j + 2));
        let val = p1
            + 0.5
                * f
                * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
        s * val
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, synthesize_initial, InitialFamily};

    fn state(frame: Frame, alpha: f64, chi: f64, field: Field) -> SimState {
        SimState::new(frame, 0.0, field, FractionalExponent::new(alpha).unwrap(), chi).unwrap()
    }

    fn l1(a: &Field, b: &Field) -> f64 {
        a.grid().dx()
            * a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
    }

    #[test]
    fn frame_and_outcome_strings() {
        for f in [Frame::Physical, Frame::Rescaled] {
            assert_eq!(f.as_str().parse::<Frame>().unwrap(), f);
        }
        for o in [
            Outcome::Completed,
            Outcome::BlowupDetected,
            Outcome::ResolutionLost,
            Outcome::StepFloor,
        ] {
            assert_eq!(o.as_str().parse::<Outcome>().unwrap(), o);
        }
    }

    #[test]
    fn rescaled_frame_needs_alpha_one() {
        let g = make_grid(64, 10.0).unwrap();
        let f = Field::zeros(g);
        let a = FractionalExponent::new(0.5).unwrap();
        assert!(SimState::new(Frame::Rescaled, 0.0, f.clone(), a, 1.0).is_err());
        assert!(SimState::new(Frame::Physical, 0.0, f, a, -1.0).is_err());
    }

    #[test]
    fn control_validation() {
        assert!(StepControl::default().validate().is_ok());
        let bad = StepControl {
            dt_min: 1.0,
            dt_max: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = StepControl {
            safety: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cfl_cases() {
        let g = make_grid(1024, 8.0).unwrap();
        let c = StepControl::default();
        let zero = state(Frame::Physical, 0.5, 0.0, Field::zeros(g.clone()));
        assert_eq!(cfl_dt(&zero, &c), c.dt_max);
        let ind = synthesize_initial(InitialFamily::Indicator, 2.0, 1.0, 0.0, &g).unwrap();
        let s1 = state(Frame::Physical, 0.5, 1.0, ind.clone());
        let dt1 = cfl_dt_unclamped(&s1, 0.1);
        // on the line max |drift| = 1; the mean-free periodic drift peaks at 1 - M/(2L)
        let vmax = 1.0 - 2.0 / 16.0;
        assert!((0.1 * g.dx() / dt1 / vmax - 1.0).abs() < 0.01);
        let s2 = state(Frame::Physical, 0.5, 1.0, ind.scaled(2.0).unwrap());
        assert!((cfl_dt_unclamped(&s2, 0.1) / dt1 - 0.5).abs() < 1e-12);
        let r = state(Frame::Rescaled, 1.0, 0.0, Field::zeros(g.clone()));
        let dtr = cfl_dt_unclamped(&r, 0.1);
        assert!((dtr - 0.1 * g.dx() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn zero_is_fixed_point() {
        let g = make_grid(64, 10.0).unwrap();
        let s = state(Frame::Physical, 0.7, 1.0, Field::zeros(g));
        let out = step(&s, 0.1).unwrap();
        assert!(out.field().values().iter().all(|v| *v == 0.0));
        assert_eq!(out.time(), 0.1);
        assert!(step(&s, 0.0).is_err());
    }

    #[test]
    fn heat_kernel_oracle() {
        let g = make_grid(2048, 30.0).unwrap();
        let s0 = 1.0;
        let rho = synthesize_initial(InitialFamily::Gaussian, 1.0, s0, 0.0, &g).unwrap();
        let mut st = state(Frame::Physical, 2.0, 0.0, rho);
        for _ in 0..1000 {
            st = step(&st, 1e-3).unwrap();
        }
        let sd = (s0 * s0 + 2.0 * st.time()).sqrt();
        let exact = synthesize_initial(InitialFamily::Gaussian, 1.0, sd, 0.0, &g).unwrap();
        assert!(l1(st.field(), &exact) < 1e-4);
    }

    #[test]
    fn poisson_kernel_oracle() {
        let g = make_grid(2048, 30.0).unwrap();
        let rho = synthesize_initial(InitialFamily::Cauchy, 1.0, 1.0, 0.0, &g).unwrap();
        let st = state(Frame::Physical, 1.0, 0.0, rho);
        let traj = advance(&st, 1.0, &StepControl::default(), &ObservationPlan::new(1.0)).unwrap();
        let exact = synthesize_initial(InitialFamily::Cauchy, 1.0, 2.0, 0.0, &g).unwrap();
        assert_eq!(traj.outcome, Outcome::Completed);
        assert!(l1(traj.final_state.field(), &exact) < 1e-10);
    }

    #[test]
    fn empty_horizon() {
        let g = make_grid(64, 10.0).unwrap();
        let st = state(Frame::Physical, 1.0, 1.0, Field::zeros(g));
        let traj = advance(&st, 0.0, &StepControl::default(), &ObservationPlan::new(0.1)).unwrap();
        assert_eq!(traj.outcome, Outcome::Completed);
        assert!(traj.diagnostics.is_empty() && traj.snapshots.is_empty());
        assert!(advance(&st, -1.0, &StepControl::default(), &ObservationPlan::new(0.1)).is_err());
    }

    #[test]
    fn observations_land_exactly() {
        let g = make_grid(256, 20.0).unwrap();
        let rho = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g).unwrap();
        let st = state(Frame::Physical, 1.0, 1.0, rho);
        let c = StepControl {
            dt_max: 0.03,
            ..Default::default()
        };
        let traj = advance(&st, 0.5, &c, &ObservationPlan::new(0.1)).unwrap();
        let times: Vec<f64> = traj.diagnostics.iter().map(|r| r.time).collect();
        assert_eq!(times.len(), 6);
        for (m, t) in times.iter().enumerate() {
            assert_eq!(*t, (m as f64 * 0.1).min(0.5));
        }
        assert_eq!(traj.snapshots.len(), 6);
        assert!(traj.max_mass_drift < 1e-13);
        assert_eq!(traj.halt_time(), 0.5);
    }

    #[test]
    fn max_steps_is_explicit() {
        let g = make_grid(128, 20.0).unwrap();
        let rho = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g).unwrap();
        let st = state(Frame::Physical, 1.0, 1.0, rho);
        let c = StepControl {
            dt_max: 1e-3,
            max_steps: 10,
            ..Default::default()
        };
        let traj = advance(&st, 1.0, &c, &ObservationPlan::new(1.0)).unwrap();
        assert_eq!(traj.outcome, Outcome::StepFloor);
        assert_eq!(traj.halt_reason, "max_steps");
        assert_eq!(traj.steps, 10);
        assert_eq!(traj.diagnostics.len(), 2);
    }

    #[test]
    fn heun_is_second_order() {
        // Transport-dominated problem; reference from a much finer step.
        let g = make_grid(256, 20.0).unwrap();
        let rho = synthesize_initial(InitialFamily::Gaussian, 5.0, 1.0, 0.0, &g).unwrap();
        let st = state(Frame::Physical, 0.5, 1.0, rho);
        let run = |dt: f64| {
            let mut s = st.clone();
            let steps = (0.2 / dt).round() as usize;
            for _ in 0..steps {
                s = step(&s, dt).unwrap();
            }
            s
        };
        let reference = run(1e-4);
        let e1 = l1(run(4e-3).field(), reference.field());
        let e2 = l1(run(2e-3).field(), reference.field());
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn rescaling_a_self_similar_profile() {
        let g = make_grid(2048, 40.0).unwrap();
        let t = 1.5;
        let rho = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0 + t, 0.0, &g).unwrap();
        let u = to_rescaled(&rho, t).unwrap();
        let exact = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g).unwrap();
        assert!(l1(&u, &exact) < 1e-5);
        assert!(to_rescaled(&rho, -2.0).is_err());
    }
}
