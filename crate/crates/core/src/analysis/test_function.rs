use std::sync::Arc;

use crate::error::{Error, Result};
use crate::special::{binomial, c_alpha, gauss_legendre};
use crate::spectral::Grid;

/// The even, sublinear profile `phi` with `phi(x) = |x|` on `|x| <= 1` and `|x|^gamma`,
/// `gamma = 1 - beta`, on `|x| >= 2`.
///
/// On `[1, 2]` the derivative is blended rather than the values: with `t = (x-1)/w`,
/// `S` the quintic smoothstep and `B(s) = 140 s^3 (1-s)^3`,
///
/// ```text
/// phi'(x) = (1 - S(t)) + S(t) gamma x^{gamma-1} - c B(x - 1),
/// ```
///
/// where `c` makes `phi(2) = 2^gamma`. A plain smoothstep of the two value branches is not
/// monotone for small `gamma`; this form is positive for every `gamma` in `(0, 1)` and
/// `phi` is `C^3` away from the origin.
#[derive(Clone, Debug)]
pub struct PhiProfile {
    beta: f64,
    gamma: f64,
    width: f64,
    bump: f64,
    phi_knee: f64,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
}

fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        (s, ds, dds)
    }
}

fn bump(s: f64) -> (f64, f64) {
    if s <= 0.0 || s >= 1.0 {
        return (0.0, 0.0);
    }
    let u = s * (1.0 - s);
    (140.0 * u * u * u, 420.0 * u * u * (1.0 - 2.0 * s))
}

/// Antiderivative of `bump` from 0.
fn bump_integral(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    140.0 * (s.powi(4) / 4.0 - 3.0 * s.powi(5) / 5.0 + s.powi(6) / 2.0 - s.powi(7) / 7.0)
}

impl PhiProfile {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::arg(format!("beta = {beta} outside (0, 1)")));
        }
        let gamma = 1.0 - beta;
        let (gl_x, gl_w) = gauss_legendre(24);
        let mut p = PhiProfile {
            beta,
            gamma,
            width: (0.25 * gamma).min(0.25),
            bump: 0.0,
            phi_knee: 0.0,
            gl_x,
            gl_w,
        };
        let w = p.width;
        p.bump = p.integrate(1.0, 1.0 + w, |x| {
            let (s, _, _) = smoothstep((x - 1.0) / w);
            (1.0 - s) * (1.0 - gamma * x.powf(gamma - 1.0))
        });
        let knee = p.integrate(1.0, 1.0 + w, |x| p.slope(x));
        p.phi_knee = 1.0 + knee;
        Ok(p)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Width of the derivative blend, starting at `|x| = 1`.
    pub fn blend_width(&self) -> f64 {
        self.width
    }

    fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.gl_x
            .iter()
            .zip(&self.gl_w)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
            * h
    }

    /// `phi'` on `[1, 2]`.
    fn slope(&self, x: f64) -> f64 {
        let (s, _, _) = smoothstep((x - 1.0) / self.width);
        let (b, _) = bump(x - 1.0);
        (1.0 - s) + s * self.gamma * x.powf(self.gamma - 1.0) - self.bump * b
    }

    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        let g = self.gamma;
        if a <= 1.0 {
            a
        } else if a >= 2.0 {
            a.powf(g)
        } else {
            let knee = 1.0 + self.width;
            if a <= knee {
                1.0 + self.integrate(1.0, a, |y| self.slope(y))
            } else {
                self.phi_knee + a.powf(g)
                    - knee.powf(g)
                    - self.bump * (bump_integral(a - 1.0) - bump_integral(self.width))
            }
        }
    }

    /// `phi'`, odd; 0 at the kink `x = 0`.
    pub fn derivative(&self, x: f64) -> f64 {
        let a = x.abs();
        let d = if a == 0.0 {
            0.0
        } else if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            self.gamma * a.powf(self.gamma - 1.0)
        } else {
            self.slope(a)
        };
        d.copysign(x)
    }

    /// `phi''`, even; 0 on `|x| < 1`.
    pub fn second_derivative(&self, x: f64) -> f64 {
        let a = x.abs();
        let g = self.gamma;
        if a <= 1.0 {
            0.0
        } else if a >= 2.0 {
            g * (g - 1.0) * a.powf(g - 2.0)
        } else {
            let w = self.width;
            let (s, ds, _) = smoothstep((a - 1.0) / w);
            let (_, db) = bump(a - 1.0);
            ds / w * (g * a.powf(g - 1.0) - 1.0) + s * g * (g - 1.0) * a.powf(g - 2.0)
                - self.bump * db
        }
    }

    /// `phi(lambda x) / lambda`.
    pub fn scaled(&self, x: f64, lambda: f64) -> f64 {
        self.value(lambda * x) / lambda
    }

    fn breakpoints(&self) -> [f64; 7] {
        let k = 1.0 + self.width;
        [-2.0, -k, -1.0, 0.0, 1.0, k, 2.0]
    }

    /// `sup (1 + |x|^gamma) / (1 + phi(x))`, so that `1 + |x|^gamma <= kappa (1 + phi)`.
    pub fn kappa(&self) -> f64 {
        (0..=20_000)
            .map(|i| {
                let x = 2.0 * i as f64 / 20_000.0;
                (1.0 + x.powf(self.gamma)) / (1.0 + self.value(x))
            })
            .fold(1.0, f64::max)
    }

    /// `sup_{|x| >= 1} |phi'(x) - sgn x| / phi(x)`.
    pub fn c_r(&self) -> f64 {
        let mut best = 0.0f64;
        let mut x = 1.0;
        while x < 1e4 {
            best = best.max((self.derivative(x) - 1.0).abs() / self.value(x));
            x += if x < 3.0 { 1e-4 } else { 1e-3 * x };
        }
        best
    }

    /// `-Lambda^alpha phi (x)`, by adaptive Gauss-Legendre on the half-line integral with
    /// panels aligned to every kink and blend edge of `phi`, plus a closed-form tail.
    pub fn omega(&self, x: f64, alpha: f64) -> f64 {
        let s = 1.0 + alpha;
        let f0 = self.value(x);
        let integrand = |h: f64| (self.value(x + h) + self.value(x - h) - 2.0 * f0) * h.powf(-s);

        let tail_start = (2.0 * x.abs() + 4.0).max(8.0);
        let mut cuts: Vec<f64> = self
            .breakpoints()
            .iter()
            .map(|b| (x - b).abs())
            .filter(|h| *h > 1e-12)
            .collect();
        cuts.push(tail_start);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let mut total = 0.0;
        // graded panels towards h = 0
        let first = cuts[0];
        let h_tiny = first * 2f64.powi(-40);
        let jump = if x == 0.0 { 2.0 } else { 0.0 };
        total += jump * h_tiny.powf(1.0 - alpha) / (1.0 - alpha)
            + self.second_derivative(x) * h_tiny.powf(2.0 - alpha) / (2.0 - alpha);
        let mut lo = h_tiny;
        while lo < first {
            let hi = (2.0 * lo).min(first);
            total += self.integrate(lo, hi, integrand);
            lo = hi;
        }
        for win in cuts.windows(2) {
            let (a, b) = (win[0], win[1]);
            let mut lo = a;
            while lo < b {
                let step = if lo < 0.25 { lo } else { (0.5 * lo).max(0.25) };
                let hi = (lo + step).min(b);
                total += self.integrate(lo, hi, integrand);
                lo = hi;
            }
        }

        // for h >= tail_start, phi(x +- h) = (h +- x)^gamma; expand in x/h
        let g = self.gamma;
        let mut tail = -2.0 * f0 * tail_start.powf(-alpha) / alpha;
        for k in 0..60 {
            let e = 2 * k;
            let term = 2.0 * binomial(g, e) * x.powi(e as i32) * tail_start.powf(g - e as f64 - alpha)
                / (e as f64 + alpha - g);
            tail += term;
            if term.abs() < 1e-18 * tail.abs().max(1e-300) {
                break;
            }
        }
        c_alpha(alpha) * (total + tail)
    }
}

/// Sublinear auxiliary function `phi` sampled on a dedicated grid together with
/// `omega = -Lambda^alpha phi` and the fitted constant of `omega <= C (1 + |x|^gamma)`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub alpha: f64,
    pub beta: f64,
    pub grid: Arc<Grid>,
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    pub omega: Vec<f64>,
    pub c_omega: f64,
    profile: PhiProfile,
}

/// Default exponent, the midpoint of the admissible interval `(1 - alpha, 1)`.
pub fn default_beta(alpha: f64) -> f64 {
    1.0 - 0.5 * alpha
}

pub fn build_test_function(alpha: f64, beta: f64, grid: &Arc<Grid>) -> Result<TestFunction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!(
            "test function needs 0 < alpha < 1 (omega is singular at the kink otherwise), got {alpha}"
        )));
    }
    if !(alpha + beta > 1.0) {
        return Err(Error::arg(format!(
            "alpha + beta must exceed 1, got {alpha} + {beta}"
        )));
    }
    let profile = PhiProfile::new(beta)?;
    let xs = grid.coords();
    let phi: Vec<f64> = xs.iter().map(|&x| profile.value(x)).collect();
    let phi_prime: Vec<f64> = xs.iter().map(|&x| profile.derivative(x)).collect();
    // omega is even: evaluate on x >= 0 and mirror
    let n = grid.n();
    let mut omega = vec![0.0; n];
    for i in n / 2..n {
        omega[i] = profile.omega(xs[i], alpha);
    }
    omega[0] = profile.omega(xs[0], alpha);
    for i in 1..n / 2 {
        omega[i] = omega[grid.mirror(i)];
    }
    let gamma = profile.gamma();
    let c_omega = xs
        .iter()
        .zip(&omega)
        .map(|(x, w)| w / (1.0 + x.abs().powf(gamma)))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TestFunction {
        alpha,
        beta,
        grid: grid.clone(),
        phi,
        phi_prime,
        omega,
        c_omega,
        profile,
    })
}

impl TestFunction {
    pub fn profile(&self) -> &PhiProfile {
        &self.profile
    }

    /// Value of `omega` at the node `x = 0`.
    pub fn omega_at_origin(&self) -> f64 {
        self.omega[self.grid.n() / 2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn closed_form_branches() {
        let p = PhiProfile::new(0.75).unwrap();
        assert_eq!(p.value(0.5), 0.5);
        assert_eq!(p.value(-0.5), 0.5);
        assert_eq!(p.value(4.0), 4f64.powf(0.25));
        assert_eq!(p.value(1.0), 1.0);
        assert_eq!(p.value(2.0), 2f64.powf(0.25));
    }

    #[test]
    fn blend_is_continuous_and_monotone() {
        for beta in [0.05, 0.3, 0.5, 0.75, 0.9, 0.99] {
            let p = PhiProfile::new(beta).unwrap();
            let g = p.gamma();
            // continuity of value and slope at both ends
            assert!((p.value(2.0 - 1e-9) - 2f64.powf(g)).abs() < 1e-8, "beta {beta}");
            assert!((p.value(1.0 + 1e-9) - 1.0).abs() < 1e-8);
            assert!((p.derivative(2.0 - 1e-9) - g * 2f64.powf(g - 1.0)).abs() < 1e-7);
            assert!((p.derivative(1.0 + 1e-9) - 1.0).abs() < 1e-7);
            let knee = 1.0 + p.blend_width();
            assert!((p.value(knee - 1e-10) - p.value(knee + 1e-10)).abs() < 1e-9);
            let mut prev = p.value(0.0);
            for i in 1..=4000 {
                let x = 3.0 * i as f64 / 4000.0;
                assert!(p.derivative(x) > 0.0, "beta {beta} x {x}");
                let v = p.value(x);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = PhiProfile::new(0.6).unwrap();
        for x in [1.01, 1.05, 1.2, 1.5, 1.9, 2.5] {
            let h = 1e-6;
            let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
            assert!((fd - p.derivative(x)).abs() < 1e-7, "x {x}");
            let fd2 = (p.derivative(x + h) - p.derivative(x - h)) / (2.0 * h);
            assert!((fd2 - p.second_derivative(x)).abs() < 1e-5, "x {x}");
        }
    }

    #[test]
    fn subadditive_on_sample() {
        let p = PhiProfile::new(0.75).unwrap();
        for i in 0..100 {
            for j in 0..100 {
                let x = -5.0 + 10.0 * i as f64 / 99.0;
                let y = -5.0 + 10.0 * j as f64 / 99.0;
                assert!(p.value(x + y) <= p.value(x) + p.value(y) + 1e-10);
            }
        }
    }

    #[test]
    fn omega_of_pure_power_matches_closed_form() {
        // Away from the core, omega must approach -Lambda^alpha |x|^gamma, which for
        // |x|^gamma is c |x|^{gamma - alpha} with an explicit constant; check the decay rate.
        let p = PhiProfile::new(0.75).unwrap();
        let a = 0.5;
        let w1 = p.omega(200.0, a);
        let w2 = p.omega(400.0, a);
        let rate = (w2 / w1).ln() / 2f64.ln();
        assert!((rate - (p.gamma() - a)).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn omega_is_finite_and_positive_at_origin() {
        let p = PhiProfile::new(0.75).unwrap();
        let w0 = p.omega(0.0, 0.5);
        // omega(0) = c_alpha * int 2 phi(h) h^{-3/2} dh > 0
        assert!(w0.is_finite() && w0 > 0.0);
        // independent check: same integral with a crude substitution h = u^2
        let mut crude = 0.0;
        let m = 400_000;
        let umax = 60.0;
        for i in 0..m {
            let u = (i as f64 + 0.5) * umax / m as f64;
            let h = u * u;
            crude += 2.0 * p.value(h) * h.powf(-1.5) * 2.0 * u * umax / m as f64;
        }
        let tail = 2.0 * (umax * umax).powf(p.gamma() - 0.5) / (0.5 - p.gamma());
        let crude = c_alpha(0.5) * (crude + tail);
        assert!((w0 - crude).abs() < 1e-6 * w0, "{w0} vs {crude}");
    }

    #[test]
    fn rejects_inadmissible_exponents() {
        let g = make_grid(64, 10.0).unwrap();
        assert!(build_test_function(0.5, 0.4, &g).is_err());
        assert!(build_test_function(1.0, 0.5, &g).is_err());
        assert!(PhiProfile::new(1.0).is_err());
    }

    #[test]
    fn build_on_grid() {
        let g = make_grid(256, 50.0).unwrap();
        let tf = build_test_function(0.5, default_beta(0.5), &g).unwrap();
        for i in 1..256 {
            assert_eq!(tf.phi[i], tf.phi[g.mirror(i)]);
            assert_eq!(tf.omega[i], tf.omega[g.mirror(i)]);
        }
        for i in 128..256 {
            assert!(tf.phi_prime[i] >= -1e-12);
        }
        assert!(tf.c_omega.is_finite() && tf.c_omega > 0.0);
        assert!(tf.c_omega < 2.0 * tf.omega_at_origin());
    }
}
