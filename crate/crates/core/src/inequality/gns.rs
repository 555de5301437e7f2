use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sci;
use crate::spectral::{hs_seminorm, lp_norm, make_grid, Field, Grid};

/// `int rho^{p+1} / (||rho^{p/2}||^2_{H^{alpha/2}} ||rho||_{1/alpha})`.
pub fn gns_ratio(rho: &Field, p: f64, alpha: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::arg(format!("GNS ratio needs p >= 1, got {p}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    if rho.values().iter().any(|v| *v < 0.0) {
        return Err(Error::arg("GNS ratio needs a nonnegative density"));
    }
    let dx = rho.grid().dx();
    let num = dx * rho.values().iter().map(|v| v.powf(p + 1.0)).sum::<f64>();
    let half = rho.map(|v| v.powf(0.5 * p))?;
    let semi = hs_seminorm(&half, 0.5 * alpha)?;
    let den = semi * semi * lp_norm(rho, 1.0 / alpha)?;
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::arg("GNS ratio has a vanishing denominator"));
    }
    Ok(num / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BumpShape {
    Gaussian,
    /// Plain (not periodized) Cauchy bump, truncated by the box.
    Cauchy,
}

impl BumpShape {
    fn eval(self, x: f64, s: f64) -> f64 {
        match self {
            BumpShape::Gaussian => (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt()),
            BumpShape::Cauchy => s / (PI * (x * x + s * s)),
        }
    }

    fn letter(self) -> char {
        match self {
            BumpShape::Gaussian => 'g',
            BumpShape::Cauchy => 'c',
        }
    }
}

/// Mixtures of bumps searched for large GNS ratios. Each member is a list of bump shapes;
/// its parameters are `ln s` for every bump followed by `(center, ln weight)` for every bump
/// after the first (the ratio is invariant under translation and amplitude). Scales are
/// confined to `[8dx, L/64]`, centers to `[-L/4, L/4]`, log-weights to `[-5, 5]`.
///
/// The scale cap matters: a wide Cauchy bump truncated by the box leaves a nearly constant
/// floor, and constants have zero seminorm on the circle, so the ratio would grow with
/// `s/L` (about 1.03 at `s = L/8` against 0.79 on the line).
#[derive(Clone, Debug)]
pub struct TrialFamily {
    grid: Arc<Grid>,
    members: Vec<Vec<BumpShape>>,
}

impl TrialFamily {
    pub fn new(grid: Arc<Grid>, members: Vec<Vec<BumpShape>>) -> Result<Self> {
        if members.is_empty() || members.iter().any(|m| m.is_empty()) {
            return Err(Error::arg("trial family needs nonempty members"));
        }
        if 8.0 * grid.dx() >= grid.half_width() / 64.0 {
            return Err(Error::arg("trial grid too coarse for the scale bounds"));
        }
        Ok(TrialFamily { grid, members })
    }

    /// Grid used for reported estimates: `n = 4096`, `L = 40`, scales in about `[0.08, 0.63]`.
    pub fn reference_grid() -> Result<Arc<Grid>> {
        make_grid(4096, 40.0)
    }

    pub fn single_gaussian(grid: Arc<Grid>) -> Result<Self> {
        Self::new(grid, vec![vec![BumpShape::Gaussian]])
    }

    /// Single bumps of each shape, then pairs, then a Gaussian triple.
    pub fn standard(grid: Arc<Grid>) -> Result<Self> {
        use BumpShape::{Cauchy as C, Gaussian as G};
        Self::new(
            grid,
            vec![vec![G], vec![C], vec![G, G], vec![C, C], vec![G, C], vec![G, G, G]],
        )
    }

    /// Family with the members of `self` followed by `more`.
    pub fn extended(&self, more: Vec<Vec<BumpShape>>) -> Result<Self> {
        let mut members = self.members.clone();
        members.extend(more);
        Self::new(self.grid.clone(), members)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn members(&self) -> &[Vec<BumpShape>] {
        &self.members
    }

    fn scale_bounds(&self) -> (f64, f64) {
        let g = &self.grid;
        ((8.0 * g.dx()).ln(), (g.half_width() / 64.0).ln())
    }

    fn center_bound(&self) -> f64 {
        0.25 * self.grid.half_width()
    }

    fn dimension(member: &[BumpShape]) -> usize {
        3 * member.len() - 2
    }

    /// Density for a member and a raw parameter vector (projected onto the bounds).
    pub fn density(&self, member: &[BumpShape], params: &[f64]) -> Result<Field> {
        let m = member.len();
        if params.len() != Self::dimension(member) {
            return Err(Error::arg(format!(
                "member with {m} bumps takes {} parameters, got {}",
                Self::dimension(member),
                params.len()
            )));
        }
        let (lo, hi) = self.scale_bounds();
        let cb = self.center_bound();
        let bumps: Vec<(BumpShape, f64, f64, f64)> = member
            .iter()
            .enumerate()
            .map(|(j, &shape)| {
                let s = params[j].clamp(lo, hi).exp();
                let (c, w) = if j == 0 {
                    (0.0, 1.0)
                } else {
                    let c = params[m + 2 * (j - 1)].clamp(-cb, cb);
                    let w = params[m + 2 * (j - 1) + 1].clamp(-5.0, 5.0).exp();
                    (c, w)
                };
                (shape, s, c, w)
            })
            .collect();
        Field::from_fn(self.grid.clone(), |x| {
            bumps
                .iter()
                .map(|&(shape, s, c, w)| w * shape.eval(x - c, s))
                .sum()
        })
    }

    /// Unit scales, bumps three scales apart, equal weights.
    fn canonical_start(&self, member: &[BumpShape]) -> Vec<f64> {
        let m = member.len();
        let (lo, hi) = self.scale_bounds();
        let mut v = vec![0.0f64.clamp(lo, hi); m];
        for j in 1..m {
            v.push(3.0 * j as f64);
            v.push(0.0);
        }
        v
    }

    fn random_start(&self, member: &[BumpShape], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let m = member.len();
        let (lo, hi) = self.scale_bounds();
        let cb = 0.5 * self.center_bound();
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(lo..hi)).collect();
        for _ in 1..m {
            v.push(rng.random_range(-cb..cb));
            v.push(rng.random_range(-1.0..1.0));
        }
        v
    }

    fn label(member: &[BumpShape]) -> String {
        member.iter().map(|s| s.letter()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnsEstimate {
    pub p: f64,
    pub alpha: f64,
    /// Largest ratio over every evaluated trial; a lower bound on the optimal constant.
    pub c_hat: f64,
    /// Member label (`g`, `c` per bump) and parameters of the best trial.
    pub argmax_member: String,
    pub argmax_params: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

pub const GNS_CSV_HEADER: &str = "p,alpha,C_hat,trials,seed";

impl GnsEstimate {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            sci(self.p),
            sci(self.alpha),
            sci(self.c_hat),
            self.trials,
            self.seed
        )
    }
}

pub fn write_gns_csv<W: Write>(estimates: &[GnsEstimate], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{GNS_CSV_HEADER}")?;
    for e in estimates {
        writeln!(out, "{}", e.csv_line())?;
    }
    Ok(())
}

struct Best {
    value: f64,
    member: String,
    params: Vec<f64>,
}

/// Objective with a hard evaluation budget and a record of the best trial.
struct Objective<'a> {
    family: &'a TrialFamily,
    member: &'a [BumpShape],
    p: f64,
    alpha: f64,
    budget: usize,
    used: &'a RefCell<usize>,
    best: &'a RefCell<Option<Best>>,
    valid: &'a RefCell<usize>,
}

impl Objective<'_> {
    fn evaluate(&self, params: &[f64]) -> f64 {
        {
            let mut used = self.used.borrow_mut();
            if *used >= self.budget {
                return f64::INFINITY;
            }
            *used += 1;
        }
        let ratio = self
            .family
            .density(self.member, params)
            .and_then(|rho| gns_ratio(&rho, self.p, self.alpha));
        match ratio {
            Ok(r) if r.is_finite() => {
                *self.valid.borrow_mut() += 1;
                let mut best = self.best.borrow_mut();
                if best.as_ref().is_none_or(|b| r > b.value) {
                    *best = Some(Best {
                        value: r,
                        member: TrialFamily::label(self.member),
                        params: params.to_vec(),
                    });
                }
                -r
            }
            _ => f64::INFINITY,
        }
    }

    fn exhausted(&self) -> bool {
        *self.used.borrow() >= self.budget
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, params: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.evaluate(params))
    }
}

fn stage_seed(seed: u64, stage: usize) -> u64 {
    seed ^ (stage as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Maximizes the GNS ratio over `family` by Nelder-Mead restarts.
///
/// Each family member is a stage with its own `budget` of ratio evaluations and its own RNG
/// stream, so appending members to a family can only raise the estimate. The first start of
/// every stage is the canonical one; with `budget = 1` nothing else is evaluated.
pub fn estimate_gns_constant(
    p: f64,
    alpha: f64,
    family: &TrialFamily,
    budget: usize,
    seed: u64,
) -> Result<GnsEstimate> {
    if budget == 0 {
        return Err(Error::arg("GNS search budget must be positive"));
    }
    let best = RefCell::new(None);
    let valid = RefCell::new(0usize);
    let mut trials = 0;
    for (stage, member) in family.members().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, stage));
        let used = RefCell::new(0usize);
        let objective = || Objective {
            family,
            member,
            p,
            alpha,
            budget,
            used: &used,
            best: &best,
            valid: &valid,
        };
        let mut start = family.canonical_start(member);
        if budget == 1 {
            objective().evaluate(&start);
        }
        while !objective().exhausted() {
            let mut simplex = vec![start.clone()];
            for d in 0..start.len() {
                let mut v = start.clone();
                v[d] += if d < member.len() { 0.3 } else { 1.0 };
                simplex.push(v);
            }
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(1e-10)
                .map_err(|e| Error::arg(e.to_string()))?;
            Executor::new(objective(), solver)
                .configure(|s| s.max_iters(budget as u64))
                .run()
                .map_err(|e| Error::arg(format!("simplex search failed: {e}")))?;
            start = family.random_start(member, &mut rng);
        }
        trials += *used.borrow();
    }
    if *valid.borrow() == 0 {
        return Err(Error::arg("every GNS trial was invalid"));
    }
    let b = best.into_inner().expect("a valid trial was recorded");
    Ok(GnsEstimate {
        p,
        alpha,
        c_hat: b.value,
        argmax_member: b.member,
        argmax_params: b.params,
        trials,
        seed,
    })
}

/// The supercritical form `int rho^{p+1} <= K ||rho^{p/2}||^{2 beta}_{H^{alpha/2}}
/// M^{1 + p(1-beta)}`, `beta = p/(p+alpha-1)`, for `1 < alpha <= 2`, whose constant is
/// unspecified: it is fitted as the largest ratio over a corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SupercriticalCheck {
    pub lhs: f64,
    pub rhs_shape: f64,
    pub ratio: f64,
    /// Largest ratio over the corpus and the field itself.
    pub fitted_constant: f64,
}

fn supercritical_sides(rho: &Field, p: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    if !(p >= 1.0) {
        return Err(Error::arg(format!("supercritical check needs p >= 1, got {p}")));
    }
    let beta = p / (p + alpha - 1.0);
    let dx = rho.grid().dx();
    let lhs = dx * rho.values().iter().map(|v| v.abs().powf(p + 1.0)).sum::<f64>();
    let half = rho.map(|v| v.abs().powf(0.5 * p))?;
    let semi = hs_seminorm(&half, 0.5 * alpha)?;
    let mass = rho.mass();
    let rhs = semi.powf(2.0 * beta) * mass.powf(1.0 + p * (1.0 - beta));
    Ok((lhs, rhs))
}

pub fn gns_supercritical_check(
    rho: &Field,
    p: f64,
    alpha: f64,
    corpus: &[Field],
) -> Result<SupercriticalCheck> {
    let (lhs, rhs_shape) = supercritical_sides(rho, p, alpha)?;
    if !(rhs_shape > 0.0) {
        return Err(Error::arg("supercritical right-hand side vanishes"));
    }
    let ratio = lhs / rhs_shape;
    let mut fitted = ratio;
    for f in corpus {
        let (l, r) = supercritical_sides(f, p, alpha)?;
        if r > 0.0 {
            fitted = fitted.max(l / r);
        }
    }
    Ok(SupercriticalCheck {
        lhs,
        rhs_shape,
        ratio,
        fitted_constant: fitted,
    })
}

/// Gaussians, Cauchy bumps and Gaussian pairs over a range of scales.
pub fn supercritical_corpus(grid: &Arc<Grid>) -> Result<Vec<Field>> {
    let family = TrialFamily::standard(grid.clone())?;
    let (lo, hi) = family.scale_bounds();
    let mut out = Vec::new();
    for i in 0..5 {
        let ls = lo + (hi - lo) * i as f64 / 4.0;
        out.push(family.density(&[BumpShape::Gaussian], &[ls])?);
        out.push(family.density(&[BumpShape::Cauchy], &[ls])?);
        let sep = 3.0 * ls.exp();
        out.push(family.density(&[BumpShape::Gaussian; 2], &[ls, ls, sep, 0.0])?);
    }
    Ok(out)
}
