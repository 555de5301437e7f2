use std::io::Write;

use super::test_function::{PhiProfile, TestFunction};
use super::first_moment;
use crate::error::{Error, Result};
use crate::sci;
use crate::spectral::{lp_norm, Field};

/// `dx * sum phi(lambda x_i) / lambda * rho_i`.
pub fn corrected_moment(rho: &Field, tf: &TestFunction, lambda: f64) -> Result<f64> {
    corrected_moment_with(rho, tf.profile(), lambda)
}

/// Same as [`corrected_moment`] from the bare profile.
pub fn corrected_moment_with(rho: &Field, phi: &PhiProfile, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
    }
    let g = rho.grid();
    let sum: f64 = rho
        .values()
        .iter()
        .enumerate()
        .map(|(i, r)| phi.scaled(g.x(i), lambda) * r)
        .sum();
    Ok(g.dx() * sum)
}

/// Balances `C lambda^alpha` against `lambda M`: `lambda = (2C/M)^{1/(1-alpha)}`, `mu = 2C`.
pub fn choose_lambda(mass: f64, alpha: f64, c: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!(
            "lambda balancing needs 0 < alpha < 1, got {alpha}"
        )));
    }
    if !(mass > 0.0) || !(c > 0.0) {
        return Err(Error::arg("mass and balancing constant must be positive"));
    }
    let mu = 2.0 * c;
    Ok(((mu / mass).powf(1.0 / (1.0 - alpha)), mu))
}

/// Effective constants of the corrected-moment argument for one mass.
///
/// With `omega <= C_omega (1 + |x|^gamma) <= C1 (1 + phi)`, `C1 = kappa C_omega`, and
/// `|phi' - sgn| <= C_R phi`, an even nonnegative solution obeys
///
/// ```text
/// dI/dt <= C1 M lambda^{alpha-1} - M^2/4 + (C1 lambda^alpha + C_R lambda M / 2) I.
/// ```
///
/// Choosing `C = 4 C1` in [`choose_lambda`] turns the constant part into `-M^2/8` and the
/// coefficient of `I` into `A = lambda M (1/8 + C_R/2)`, so `I(0) < M^2/(8A)` forces `I` to
/// reach zero in finite time. Since `I(0)` is at most the first moment this is implied by
/// `first_moment^{1-alpha} <= K2 M^{2-alpha}` with `K2 = 1 / (mu (1 + 4 C_R)^{1-alpha})`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlowupCriterion {
    pub alpha: f64,
    pub beta: f64,
    pub mass: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Balancing constant `C = 4 C1`.
    pub c: f64,
    pub c1: f64,
    pub c_r: f64,
    /// Coefficient `A` of `I` in the moment inequality.
    pub growth: f64,
    pub k2_effective: f64,
}

impl BlowupCriterion {
    pub fn new(tf: &TestFunction, mass: f64) -> Result<Self> {
        let profile = tf.profile();
        let c1 = profile.kappa() * tf.c_omega;
        let c_r = profile.c_r();
        let c = 4.0 * c1;
        let (lambda, mu) = choose_lambda(mass, tf.alpha, c)?;
        let growth = lambda * mass * (0.125 + 0.5 * c_r);
        let k2_effective = 1.0 / (mu * (1.0 + 4.0 * c_r).powf(1.0 - tf.alpha));
        Ok(BlowupCriterion {
            alpha: tf.alpha,
            beta: tf.beta,
            mass,
            lambda,
            mu,
            c,
            c1,
            c_r,
            growth,
            k2_effective,
        })
    }

    /// Upper bound `M^2/(8A)` on `I(0)`.
    pub fn moment_bound(&self) -> f64 {
        self.mass * self.mass / (8.0 * self.growth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionKind {
    GlobalSmallness,
    Blowup,
}

impl CriterionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CriterionKind::GlobalSmallness => "global_smallness",
            CriterionKind::Blowup => "blowup",
        }
    }
}

/// Evaluated hypothesis of one criterion: `value` is compared against `threshold`,
/// `margin = threshold - value`, and `extra` carries the constants behind the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub kind: CriterionKind,
    pub satisfied: bool,
    pub value: f64,
    pub threshold: f64,
    pub margin: f64,
    pub extra: Vec<(&'static str, f64)>,
}

impl CriterionReport {
    /// `threshold / value`; at least 1 when satisfied.
    pub fn ratio(&self) -> f64 {
        self.threshold / self.value
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.extra.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn lambda(&self) -> Option<f64> {
        self.get("lambda")
    }
}

/// Writes `criterion,key,value` rows.
pub fn write_criteria_csv<W: Write>(reports: &[CriterionReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "criterion,key,value")?;
    for r in reports {
        let name = r.kind.as_str();
        writeln!(out, "{name},satisfied,{}", u8::from(r.satisfied))?;
        writeln!(out, "{name},value,{}", sci(r.value))?;
        writeln!(out, "{name},threshold,{}", sci(r.threshold))?;
        writeln!(out, "{name},margin,{}", sci(r.margin))?;
        for (k, v) in &r.extra {
            writeln!(out, "{name},{k},{}", sci(*v))?;
        }
    }
    Ok(())
}

/// Smallness of `||rho0||_{1/alpha}` against `4 alpha / C_hat`.
pub fn check_global_smallness(rho0: &Field, alpha: f64, c_hat: f64) -> Result<CriterionReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg(format!("smallness criterion needs 0 < alpha <= 1, got {alpha}")));
    }
    if !(c_hat > 0.0) {
        return Err(Error::arg("GNS constant estimate must be positive"));
    }
    let norm = lp_norm(rho0, 1.0 / alpha)?;
    let threshold = 4.0 * alpha / c_hat;
    let margin = threshold - norm;
    Ok(CriterionReport {
        kind: CriterionKind::GlobalSmallness,
        satisfied: margin > 0.0,
        value: norm,
        threshold,
        margin,
        extra: vec![("c_hat", c_hat), ("alpha", alpha)],
    })
}

/// Concentration criterion `first_moment^{1-alpha} <= K2 M^{2-alpha}` for even data.
pub fn check_blowup_criterion(
    rho0: &Field,
    alpha: f64,
    crit: &BlowupCriterion,
) -> Result<CriterionReport> {
    if !(alpha > 0.0 && alpha < 1.0) || alpha != crit.alpha {
        return Err(Error::arg(format!(
            "blow-up criterion built for alpha = {} cannot be applied at alpha = {alpha}",
            crit.alpha
        )));
    }
    let scale = rho0.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let asym = rho0.asymmetry();
    if asym > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotEven(asym));
    }
    let mass = rho0.mass();
    if (mass - crit.mass).abs() > 1e-8 * crit.mass {
        return Err(Error::arg(format!(
            "criterion built for mass {} applied to mass {mass}",
            crit.mass
        )));
    }
    let fm = first_moment(rho0);
    let value = fm.powf(1.0 - alpha);
    let threshold = crit.k2_effective * mass.powf(2.0 - alpha);
    let i0 = corrected_moment_with(rho0, &PhiProfile::new(crit.beta)?, crit.lambda)?;
    Ok(CriterionReport {
        kind: CriterionKind::Blowup,
        satisfied: value <= threshold,
        value,
        threshold,
        margin: threshold - value,
        extra: vec![
            ("first_moment", fm),
            ("mass", mass),
            ("lambda", crit.lambda),
            ("mu", crit.mu),
            ("C", crit.c),
            ("K2_effective", crit.k2_effective),
            ("i_lambda", i0),
            ("i_lambda_bound", crit.moment_bound()),
        ],
    })
}
