//! Special functions and quadrature nodes used by the singular integrals.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// Normalization of the singular-integral form of `Lambda^alpha` in one dimension,
/// `c_alpha = 2^alpha Gamma((1+alpha)/2) / (sqrt(pi) |Gamma(-alpha/2)|)`, paired with the
/// half-line integral `int_0^inf (2f(x) - f(x+h) - f(x-h)) h^{-1-alpha} dh`.
pub fn c_alpha(alpha: f64) -> f64 {
    2f64.powf(alpha) * gamma(0.5 * (1.0 + alpha)) / (PI.sqrt() * gamma(-0.5 * alpha).abs())
}

/// Bernoulli numbers B_2 .. B_20.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta `sum_{k>=0} (k + a)^{-s}` for `s > 1`, `a > 0`, by Euler-Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    const N: usize = 12;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (a + k as f64).powf(-s);
    }
    let b = a + N as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // term j: B_2j/(2j)! * s(s+1)...(s+2j-2) * b^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut pow = b.powf(-s - 1.0);
    for (j, bern) in BERNOULLI.iter().enumerate() {
        let term = bern / fact * rising * pow;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let m = 2.0 * (j + 1) as f64;
        rising *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        pow /= b * b;
    }
    sum
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, dp)
}

/// Generalized binomial coefficient `binom(g, k)`.
pub fn binomial(g: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (g - j as f64) / (j as f64 + 1.0))
}
