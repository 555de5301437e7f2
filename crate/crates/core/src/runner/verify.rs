use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::inequality::{
    estimate_gns_constant, gns_supercritical_check, random_smooth_positive_field, verify_ipp,
    TrialFamily,
};
use crate::integrator::{advance, step, Frame, ObservationPlan, SimState, StepControl};
use crate::operators::{
    frac_laplacian_quadrature, frac_laplacian_spectral, FractionalExponent, QuadratureScheme,
};
use crate::spectral::{make_grid, synthesize_initial, Field, InitialFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Operators,
    Inequalities,
    Oracles,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "operators" => Ok(Suite::Operators),
            "inequalities" => Ok(Suite::Inequalities),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            _ => Err(Error::arg(format!("unknown suite `{s}`"))),
        }
    }
}

/// One verification: passes when `value <= threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    pub fn at_most(suite: &'static str, name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckResult {
            suite,
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: {:.3e} (limit {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.value,
            self.threshold
        )
    }
}

pub fn verify(suite: Suite) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Operators | Suite::All) {
        out.push(eigenmode_check()?);
        out.extend(cross_validation_checks()?);
    }
    if matches!(suite, Suite::Inequalities | Suite::All) {
        out.extend(ipp_checks()?);
        out.push(gns_stability_check()?);
        out.push(supercritical_homogeneity_check()?);
    }
    if matches!(suite, Suite::Oracles | Suite::All) {
        out.push(heat_oracle()?);
        out.push(poisson_oracle()?);
        out.push(mass_conservation_check()?);
    }
    Ok(out)
}

fn l1(a: &Field, b: &Field) -> f64 {
    a.grid().dx()
        * a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
}

/// `Lambda^alpha cos(k_j x) = |k_j|^alpha cos(k_j x)` on every resolved mode of a 64-point
/// grid, worst relative error over `alpha in {0.5, 1, 1.5, 2}`.
pub fn eigenmode_check() -> Result<CheckResult> {
    let g = make_grid(64, PI)?;
    let mut worst = 0.0f64;
    for a in [0.5, 1.0, 1.5, 2.0] {
        let alpha = FractionalExponent::new(a)?;
        for q in 1..g.n() / 2 {
            let k = g.wavenumbers()[q];
            let f = Field::from_fn(g.clone(), |x| (k * x).cos())?;
            let lf = frac_laplacian_spectral(&f, alpha);
            let s = k.abs().powf(a);
            let err = lf
                .values()
                .iter()
                .zip(f.values())
                .map(|(l, v)| (l - s * v).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err / s);
        }
    }
    Ok(CheckResult::at_most("operators", "eigenmodes", worst, 1e-12))
}

/// Spectral against singular-integral `Lambda^alpha` on a unit Gaussian (n = 2048, L = 20).
/// The quadrature carries its own normalization `c_alpha`, so agreement validates it.
pub fn cross_validation_checks() -> Result<Vec<CheckResult>> {
    let g = make_grid(2048, 20.0)?;
    let f = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g)?;
    let mut out = Vec::new();
    for a in [0.3, 0.5, 0.8, 1.0, 1.5] {
        let alpha = FractionalExponent::new(a)?;
        let q = QuadratureScheme::for_grid(&g, alpha);
        let quad = frac_laplacian_quadrature(&f, alpha, &q)?;
        let spec = frac_laplacian_spectral(&f, alpha);
        let (mut num, mut den) = (0.0, 0.0);
        for (x, y) in quad.values().iter().zip(spec.values()) {
            num += (x - y).powi(2);
            den += y * y;
        }
        out.push(CheckResult::at_most(
            "operators",
            format!("cross_validation_alpha_{a}"),
            (num / den).sqrt(),
            1e-3,
        ));
    }
    Ok(out)
}

/// Integration-by-parts inequality on 100 random smooth positive fields for each
/// `p in {2, 3, 4}` and `alpha in {0.5, 1, 1.5}`: the worst relative violation
/// `-margin/|lhs|`, and for `p = 2` the worst `|margin|/|lhs|`.
pub fn ipp_checks() -> Result<Vec<CheckResult>> {
    let g = make_grid(512, 10.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let fields: Vec<Field> = (0..100)
        .map(|_| random_smooth_positive_field(&g, 16, &mut rng))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut p2 = 0.0f64;
    for p in [2.0, 3.0, 4.0] {
        for a in [0.5, 1.0, 1.5] {
            let mut worst = f64::NEG_INFINITY;
            for f in &fields {
                let c = verify_ipp(f, p, a)?;
                let rel = -c.margin / c.lhs.abs();
                worst = worst.max(rel);
                if p == 2.0 {
                    p2 = p2.max(rel.abs());
                }
            }
            out.push(CheckResult::at_most(
                "inequalities",
                format!("ipp_p{p}_alpha{a}"),
                worst,
                1e-10,
            ));
        }
    }
    out.push(CheckResult::at_most("inequalities", "ipp_p2_identity", p2, 1e-12));
    Ok(out)
}

/// Relative spread of `C_hat(2, 1)` over two seeds and two resolutions.
pub fn gns_stability_check() -> Result<CheckResult> {
    let mut vals = Vec::new();
    for (n, seed) in [(4096, 1), (4096, 2), (8192, 1)] {
        let family = TrialFamily::standard(make_grid(n, 40.0)?)?;
        vals.push(estimate_gns_constant(2.0, 1.0, &family, 200, seed)?.c_hat);
    }
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CheckResult::at_most(
        "inequalities",
        "gns_c_hat_p2_alpha1_spread",
        (hi - lo) / lo,
        0.02,
    ))
}

/// Both sides of the supercritical form scale like `c^{p+1}` under `rho -> c rho`.
pub fn supercritical_homogeneity_check() -> Result<CheckResult> {
    let g = make_grid(2048, 40.0)?;
    let rho = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g)?;
    let a = gns_supercritical_check(&rho, 2.0, 1.5, &[])?;
    let b = gns_supercritical_check(&rho.scaled(3.0)?, 2.0, 1.5, &[])?;
    let err = ((b.lhs / a.lhs) / 27.0 - 1.0)
        .abs()
        .max(((b.rhs_shape / a.rhs_shape) / 27.0 - 1.0).abs());
    Ok(CheckResult::at_most(
        "inequalities",
        "supercritical_homogeneity",
        err,
        1e-8,
    ))
}

/// Heat semigroup: a Gaussian of variance `s^2` becomes variance `s^2 + 2t` (n = 2048,
/// L = 30, dt = 1e-3, t = 1), L^1 error.
pub fn heat_oracle() -> Result<CheckResult> {
    let g = make_grid(2048, 30.0)?;
    let rho = synthesize_initial(InitialFamily::Gaussian, 1.0, 1.0, 0.0, &g)?;
    let mut st = SimState::new(Frame::Physical, 0.0, rho, FractionalExponent::new(2.0)?, 0.0)?;
    for _ in 0..1000 {
        st = step(&st, 1e-3)?;
    }
    let exact = synthesize_initial(InitialFamily::Gaussian, 1.0, 3.0f64.sqrt(), 0.0, &g)?;
    Ok(CheckResult::at_most(
        "oracles",
        "heat_kernel_l1",
        l1(st.field(), &exact),
        1e-4,
    ))
}

/// Poisson semigroup: the (periodized) Cauchy density of scale 1 becomes scale 2 at t = 1.
pub fn poisson_oracle() -> Result<CheckResult> {
    let g = make_grid(2048, 30.0)?;
    let rho = synthesize_initial(InitialFamily::Cauchy, 1.0, 1.0, 0.0, &g)?;
    let st = SimState::new(Frame::Physical, 0.0, rho, FractionalExponent::new(1.0)?, 0.0)?;
    let traj = advance(&st, 1.0, &StepControl::default(), &ObservationPlan::new(1.0))?;
    let exact = synthesize_initial(InitialFamily::Cauchy, 1.0, 2.0, 0.0, &g)?;
    Ok(CheckResult::at_most(
        "oracles",
        "poisson_kernel_l1",
        l1(traj.final_state.field(), &exact),
        1e-3,
    ))
}

/// Relative mass drift over 1e5 steps of a chemotactic run.
pub fn mass_conservation_check() -> Result<CheckResult> {
    let g = make_grid(256, 20.0)?;
    let rho = synthesize_initial(InitialFamily::Gaussian, 2.0, 1.0, 0.0, &g)?;
    let st = SimState::new(Frame::Physical, 0.0, rho, FractionalExponent::new(1.0)?, 1.0)?;
    let control = StepControl {
        dt_min: 1e-4,
        dt_max: 1e-4,
        ..StepControl::default()
    };
    let mut plan = ObservationPlan::new(0.1);
    plan.keep_snapshots = false;
    let traj = advance(&st, 10.0, &control, &plan)?;
    if traj.steps < 100_000 {
        return Err(Error::arg(format!(
            "mass check took {} steps, expected at least 1e5",
            traj.steps
        )));
    }
    Ok(CheckResult::at_most(
        "oracles",
        "mass_drift_1e5_steps",
        traj.max_mass_drift,
        1e-12,
    ))
}
