use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::report::{BoundCheck, Estimate, InequalityReport, TheoremId};
use super::{delta_se, ind, mean_se, per_replicate, threshold_rows};
use crate::analytic::{self, std_pdf, std_quantile};
use crate::error::{Error, Result};
use crate::events::{CompiledEvent, EventSpec};
use crate::kernels::CovarianceModel;
use crate::measures::{self, CrossSign, Ridge};
use crate::quad;
use crate::sampler::{CirculantPlan, GaussianField, Grid};

/// Assumed absolute accuracy of a computed maximum correlation, propagated
/// into bounds that depend on it.
const RHO_ACCURACY: f64 = 1e-9;

/// Which constant to use in the two-sided sprinkled bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantMode {
    /// `c = 36` for both sides, valid for any sign pattern
    #[serde(rename = "proof-36")]
    Proof36,
    /// `c = 1` for the upper side and `c = 0` for the mirror side; requires a
    /// nonnegative cross-covariance block
    #[serde(rename = "positive-1")]
    Positive1,
}

impl ConstantMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Proof36 => "proof-36",
            Self::Positive1 => "positive-1",
        }
    }
}

impl std::str::FromStr for ConstantMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proof-36" => Ok(Self::Proof36),
            "positive-1" => Ok(Self::Positive1),
            _ => Err(Error::Config(format!("unknown constant mode {s:?}; valid: proof-36, positive-1"))),
        }
    }
}

/// Test functionals for the interpolation formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Coordinate { index: usize },
    MaxOfTwo { first: usize, second: usize },
}

impl Functional {
    /// Value and the coordinate carrying the gradient.
    fn eval(&self, x: &[f64]) -> (f64, usize) {
        match *self {
            Self::Coordinate { index } => (x[index], index),
            Self::MaxOfTwo { first, second } => {
                if x[second] > x[first] {
                    (x[second], second)
                } else {
                    (x[first], first)
                }
            }
        }
    }

    fn max_index(&self) -> usize {
        match *self {
            Self::Coordinate { index } => index,
            Self::MaxOfTwo { first, second } => first.max(second),
        }
    }
}

/// Rectangle of threshold levels over which the covariance double integral is
/// evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationBox {
    pub u: [f64; 2],
    pub v: [f64; 2],
    /// midpoint cells per axis
    pub cells: usize,
    /// largest tolerated truncation budget
    pub tolerance: f64,
}

struct Pair {
    e1: CompiledEvent,
    e2: CompiledEvent,
    /// covariance over `I1 ++ I2`
    k: DMatrix<f64>,
    i1: Vec<usize>,
    i2: Vec<usize>,
}

impl Pair {
    fn new<F: GaussianField + ?Sized>(plan: &F, a1: &EventSpec, a2: &EventSpec) -> Result<Self> {
        let e1 = compile_for(plan, a1)?;
        let e2 = compile_for(plan, a2)?;
        let all: Vec<usize> = e1.support().iter().chain(e2.support()).cloned().collect();
        let k = DMatrix::from_fn(all.len(), all.len(), |i, j| plan.cov(all[i], all[j]));
        let n1 = e1.support().len();
        Ok(Self { i1: (0..n1).collect(), i2: (n1..all.len()).collect(), e1, e2, k })
    }

    fn sup_cross(&self) -> f64 {
        measures::sup_cross_cov(&self.k, &self.i1, &self.i2).unwrap_or(0.0)
    }

    fn min_cross(&self) -> f64 {
        self.i1.iter().flat_map(|&i| self.i2.iter().map(move |&j| (i, j))).map(|(i, j)| self.k[(i, j)]).fold(f64::INFINITY, f64::min)
    }

    fn max_cross(&self) -> f64 {
        self.i1.iter().flat_map(|&i| self.i2.iter().map(move |&j| (i, j))).map(|(i, j)| self.k[(i, j)]).fold(f64::NEG_INFINITY, f64::max)
    }

    fn sign(&self) -> CrossSign {
        measures::cross_sign(&self.k, &self.i1, &self.i2)
    }

    /// `‖K‖∞` over the union of the supports.
    fn sup_all(&self) -> f64 {
        self.k.amax()
    }

    fn rho(&self) -> Result<f64> {
        Ok(measures::max_corr(&self.k, &self.i1, &self.i2, Ridge::Auto)?.rho)
    }

    fn overlapping(&self) -> bool {
        self.e1.support().iter().any(|i| self.e2.support().binary_search(i).is_ok())
    }

    fn thresholds<F: GaussianField + ?Sized>(&self, plan: &F, n: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let rows = threshold_rows(plan, &[self.e1.clone(), self.e2.clone()], n)?;
        Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
    }
}

fn compile_for<F: GaussianField + ?Sized>(plan: &F, a: &EventSpec) -> Result<CompiledEvent> {
    let e = a.compile()?;
    if let Some(&m) = e.support().last() {
        if m >= plan.len() {
            return Err(Error::Event(format!("event support index {m} exceeds field size {}", plan.len())));
        }
    }
    if e.support().is_empty() {
        return Err(Error::Event("event has empty support".into()));
    }
    Ok(e)
}

fn need_replicates(n: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 replicates, got {n}")));
    }
    Ok(())
}

fn indicator(t: &[f64], shift: f64) -> Vec<f64> {
    t.iter().map(|&x| ind(x <= shift)).collect()
}

fn both(t1: &[f64], s1: f64, t2: &[f64], s2: f64) -> Vec<f64> {
    t1.iter().zip(t2).map(|(&a, &b)| ind(a <= s1 && b <= s2)).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `mean(j) - mean(a) mean(b)` with its paired standard error.
fn gap(j: &[f64], a: &[f64], b: &[f64]) -> Estimate {
    let (pj, pa, pb) = (mean(j), mean(a), mean(b));
    Estimate { value: pj - pa * pb, se: delta_se(&[j, a, b], &[1.0, -pb, -pa]), replicates: j.len() as u64 }
}

fn positive(name: &str, eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("{name} must be positive, got {eps}")));
    }
    Ok(())
}

/// Two-sided sprinkled decoupling with shifts `eps1` on `A1` and `eps2` on
/// `A2`, against `c ‖K₁₂‖∞ / (eps1 eps2)`.
pub fn verify_sprinkled<F: GaussianField + ?Sized>(
    plan: &F,
    a1: &EventSpec,
    a2: &EventSpec,
    eps1: f64,
    eps2: f64,
    n: u64,
    mode: ConstantMode,
) -> Result<InequalityReport> {
    let started = Instant::now();
    positive("eps1", eps1)?;
    positive("eps2", eps2)?;
    need_replicates(n)?;
    let pair = Pair::new(plan, a1, a2)?;
    let mut rep = InequalityReport::new(TheoremId::Sprinkled, plan.base_seed(), n);
    let sup = pair.sup_cross();
    rep.constant("eps1", eps1);
    rep.constant("eps2", eps2);
    rep.constant("sup_cross_cov", sup);
    if pair.overlapping() {
        rep.note("supports overlap; the bound is applied to the events as given");
    }
    let (upper_c, mirror_c) = match mode {
        ConstantMode::Proof36 => (36.0, 36.0),
        ConstantMode::Positive1 => {
            if pair.sign() != CrossSign::Nonnegative {
                rep.note("constant mode positive-1 needs a nonnegative cross covariance block");
                return Ok(rep.finish(started));
            }
            (1.0, 0.0)
        }
    };
    rep.constant("c", upper_c);
    rep.constant("c_mirror", mirror_c);
    let (t1, t2) = pair.thresholds(plan, n)?;
    let joint = both(&t1, 0.0, &t2, 0.0);
    let up1 = indicator(&t1, eps1);
    let up2 = indicator(&t2, eps2);
    let down1 = indicator(&t1, -eps1);
    let down2 = indicator(&t2, -eps2);
    rep.term("joint", mean_se(&joint));
    rep.term("shifted_up_1", mean_se(&up1));
    rep.term("shifted_up_2", mean_se(&up2));
    rep.term("shifted_down_1", mean_se(&down1));
    rep.term("shifted_down_2", mean_se(&down2));
    let upper = gap(&joint, &up1, &up2);
    let mirror = gap(&joint, &down1, &down2);
    let mirror = Estimate { value: -mirror.value, ..mirror };
    rep.term("upper_lhs", upper);
    rep.term("mirror_lhs", mirror);
    let scale = sup / (eps1 * eps2);
    rep.check(BoundCheck::new("upper", upper.value, upper.se, upper_c * scale, 0.0));
    rep.check(BoundCheck::new("mirror", mirror.value, mirror.se, mirror_c * scale, 0.0));
    Ok(rep.finish(started))
}

/// Covariance of the two thresholds against `[min K₁₂, ‖K₁₂‖∞]` (nonnegative
/// block) or `[-‖K₁₂‖∞, max K₁₂]` (nonpositive block).
pub fn verify_threshold_cov<F: GaussianField + ?Sized>(
    plan: &F,
    a1: &EventSpec,
    a2: &EventSpec,
    n: u64,
) -> Result<InequalityReport> {
    let started = Instant::now();
    need_replicates(n)?;
    let pair = Pair::new(plan, a1, a2)?;
    let mut rep = InequalityReport::new(TheoremId::ThresholdCov, plan.base_seed(), n);
    let sign = pair.sign();
    let (lo, hi) = match sign {
        CrossSign::Nonnegative => (pair.min_cross(), pair.sup_cross()),
        CrossSign::Nonpositive => (-pair.sup_cross(), pair.max_cross()),
        CrossSign::Mixed => {
            rep.note("cross covariance block has mixed signs");
            return Ok(rep.finish(started));
        }
    };
    rep.constant("lower_bound", lo);
    rep.constant("upper_bound", hi);
    let (t1, t2) = pair.thresholds(plan, n)?;
    let cov = threshold_covariance(&t1, &t2)?;
    rep.term("threshold_cov", cov);
    rep.check(BoundCheck::new("upper", cov.value, cov.se, hi, 0.0));
    rep.check(BoundCheck::new("lower", -cov.value, cov.se, -lo, 0.0));
    Ok(rep.finish(started))
}

/// Empirical covariance (divisor `n`) with the standard error of its
/// influence function.
fn threshold_covariance(t1: &[f64], t2: &[f64]) -> Result<Estimate> {
    if t1.iter().chain(t2).any(|t| !t.is_finite()) {
        return Err(Error::Numerical("non-finite threshold; is the event reachable?".into()));
    }
    let (m1, m2) = (mean(t1), mean(t2));
    let prod: Vec<f64> = t1.iter().zip(t2).map(|(a, b)| (a - m1) * (b - m2)).collect();
    Ok(mean_se(&prod))
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `∫_{|u - m| > d} √min(F, 1 - F)` when `F` concentrates around `m` at scale `sigma`.
fn tail_mass(sigma: f64, d: f64) -> f64 {
    2.0 * sigma * (2.0 * std::f64::consts::PI).sqrt() * analytic::std_sf(d.max(0.0) / (sigma * std::f64::consts::SQRT_2))
}

/// Covariance of thresholds against the double integral of
/// `P[T₁ ≤ u, T₂ ≤ v] - P[T₁ ≤ u] P[T₂ ≤ v]` over a finite box.
///
/// Thresholds are Lipschitz in the sup norm, so each concentrates around its
/// median at scale `max_i √K(i,i)`; this bounds the mass outside the box.
/// Midpoint quadrature moves each threshold by at most half a cell.
pub fn verify_hoeffding<F: GaussianField + ?Sized>(
    plan: &F,
    a1: &EventSpec,
    a2: &EventSpec,
    n: u64,
    window: Option<IntegrationBox>,
) -> Result<InequalityReport> {
    let started = Instant::now();
    need_replicates(n)?;
    let pair = Pair::new(plan, a1, a2)?;
    let mut rep = InequalityReport::new(TheoremId::Hoeffding, plan.base_seed(), n);
    let (t1, t2) = pair.thresholds(plan, n)?;
    let cov = threshold_covariance(&t1, &t2)?;
    let lip = |idx: &[usize]| idx.iter().map(|&i| pair.k[(i, i)]).fold(0.0, f64::max).sqrt();
    let (s1, s2) = (lip(&pair.i1), lip(&pair.i2));
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::Model("degenerate coordinates in event support".into()));
    }
    let (m1, m2) = (median(&t1), median(&t2));
    let window = window.unwrap_or(IntegrationBox {
        u: [m1 - 8.0 * s1, m1 + 8.0 * s1],
        v: [m2 - 8.0 * s2, m2 + 8.0 * s2],
        cells: 1024,
        tolerance: 1e-6,
    });
    if window.cells == 0 || !(window.u[1] > window.u[0]) || !(window.v[1] > window.v[0]) {
        return Err(Error::Parameter("integration box must have positive size and cells".into()));
    }
    let full1 = s1 * (2.0 * std::f64::consts::PI).sqrt();
    let full2 = s2 * (2.0 * std::f64::consts::PI).sqrt();
    let d1 = (m1 - window.u[0]).min(window.u[1] - m1);
    let d2 = (m2 - window.v[0]).min(window.v[1] - m2);
    let truncation = (tail_mass(s1, d1) * full2 + full1 * tail_mass(s2, d2)).min(full1 * full2);
    if truncation > window.tolerance {
        let mut d = s1.max(s2);
        while tail_mass(s1, d) * full2 + full1 * tail_mass(s2, d) > window.tolerance {
            d *= 1.25;
        }
        return Err(Error::Parameter(format!(
            "integration box too small: truncation budget {truncation:.3e} exceeds {:.3e}; try u in [{:.3}, {:.3}], v in [{:.3}, {:.3}]",
            window.tolerance,
            m1 - d,
            m1 + d,
            m2 - d,
            m2 + d
        )));
    }
    let integral = box_integral(&t1, &t2, &window);
    let hu = (window.u[1] - window.u[0]) / window.cells as f64;
    let hv = (window.v[1] - window.v[0]) / window.cells as f64;
    let sd = |t: &[f64]| {
        let m = mean(t);
        (t.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / t.len() as f64).sqrt()
    };
    let quadrature = sd(&t2) * hu / 2.0 + sd(&t1) * hv / 2.0 + hu * hv / 4.0;
    rep.term("threshold_cov", cov);
    rep.term("box_integral", Estimate { value: integral, se: cov.se, replicates: n });
    rep.constant("quadrature_budget", quadrature);
    rep.constant("truncation_budget", truncation);
    rep.constant("u_lo", window.u[0]);
    rep.constant("u_hi", window.u[1]);
    rep.constant("v_lo", window.v[0]);
    rep.constant("v_hi", window.v[1]);
    rep.check(BoundCheck::new("agreement", (cov.value - integral).abs(), cov.se, 0.0, quadrature + truncation));
    Ok(rep.finish(started))
}

/// Midpoint rule for the empirical joint-minus-product cdf over the box.
fn box_integral(t1: &[f64], t2: &[f64], w: &IntegrationBox) -> f64 {
    let c = w.cells;
    let hu = (w.u[1] - w.u[0]) / c as f64;
    let hv = (w.v[1] - w.v[0]) / c as f64;
    // first midpoint index whose level is at least t, or c when none is
    let cell = |t: f64, lo: f64, h: f64| -> usize {
        let k = ((t - lo) / h - 0.5).ceil();
        if k <= 0.0 {
            0
        } else if k >= c as f64 {
            c
        } else {
            k as usize
        }
    };
    let n = t1.len() as f64;
    let side = c + 1;
    let mut hist = vec![0u32; side * side];
    let mut h1 = vec![0u32; side];
    let mut h2 = vec![0u32; side];
    for (&a, &b) in t1.iter().zip(t2) {
        let (i, j) = (cell(a, w.u[0], hu), cell(b, w.v[0], hv));
        hist[i * side + j] += 1;
        h1[i] += 1;
        h2[j] += 1;
    }
    let cum = |h: &[u32]| -> Vec<f64> {
        let mut acc = 0.0;
        h[..c].iter().map(|&x| {
            acc += x as f64;
            acc / n
        }).collect()
    };
    let f1 = cum(&h1);
    let f2 = cum(&h2);
    let mut total = 0.0;
    let mut col = vec![0.0f64; c];
    for i in 0..c {
        let mut row_acc = 0.0;
        for j in 0..c {
            row_acc += hist[i * side + j] as f64;
            col[j] += row_acc;
            total += col[j] / n - f1[i] * f2[j];
        }
    }
    total * hu * hv
}

/// Local positive association: the joint probability minus the product is
/// `≥ 0` for a nonnegative cross block and `≤ 0` for a nonpositive one.
pub fn verify_positive_association<F: GaussianField + ?Sized>(
    plan: &F,
    a1: &EventSpec,
    a2: &EventSpec,
    n: u64,
) -> Result<InequalityReport> {
    let started = Instant::now();
    need_replicates(n)?;
    let pair = Pair::new(plan, a1, a2)?;
    let mut rep = InequalityReport::new(TheoremId::PositiveAssociation, plan.base_seed(), n);
    let sign = pair.sign();
    if sign == CrossSign::Mixed {
        rep.note("cross covariance block has mixed signs");
        return Ok(rep.finish(started));
    }
    let (t1, t2) = pair.thresholds(plan, n)?;
    let joint = both(&t1, 0.0, &t2, 0.0);
    let p1 = indicator(&t1, 0.0);
    let p2 = indicator(&t2, 0.0);
    let g = gap(&joint, &p1, &p2);
    rep.term("joint", mean_se(&joint));
    rep.term("marginal_1", mean_se(&p1));
    rep.term("marginal_2", mean_se(&p2));
    rep.term("gap", g);
    match sign {
        CrossSign::Nonnegative => rep.check(BoundCheck::new("gap >= 0", -g.value, g.se, 0.0, 0.0)),
        _ => rep.check(BoundCheck::new("gap <= 0", g.value, g.se, 0.0, 0.0)),
    }
    Ok(rep.finish(started))
}

/// `Cov[f(X), g(X)]` against `∫₀^∞ e^{-t} E[∇f(X)ᵀ K ∇g(Xᵗ)] dt` with
/// `Xᵗ = e^{-t} X + √(1 - e^{-2t}) X'`, the time integral by Gauss–Laguerre
/// with `t_nodes` nodes. The quadrature budget is the change from a rule
/// with half the nodes on the same draws.
pub fn verify_interp_formula<F: GaussianField + ?Sized>(
    plan: &F,
    f: Functional,
    g: Functional,
    n: u64,
    t_nodes: usize,
) -> Result<InequalityReport> {
    let started = Instant::now();
    need_replicates(n)?;
    if t_nodes < 2 {
        return Err(Error::Parameter("need at least 2 time nodes".into()));
    }
    if f.max_index().max(g.max_index()) >= plan.len() {
        return Err(Error::Parameter("functional index outside the field".into()));
    }
    let mut rep = InequalityReport::new(TheoremId::Interpolation, plan.base_seed(), n);
    let full = quad::gauss_laguerre(t_nodes);
    let half = quad::gauss_laguerre(t_nodes / 2);
    let rule = |x: &[f64], xp: &[f64], a: usize, (nodes, weights): &(Vec<f64>, Vec<f64>), buf: &mut Vec<f64>| {
        nodes.iter().zip(weights).map(|(&t, &w)| {
            let (s, c) = ((-t).exp(), (-(2.0 * t)).exp_m1().abs().sqrt());
            buf.clear();
            buf.extend(x.iter().zip(xp).map(|(a, b)| s * a + c * b));
            w * plan.cov(a, g.eval(buf).1)
        }).sum::<f64>()
    };
    let rows = per_replicate(n, |r| {
        let x = plan.draw_block(0, r);
        let xp = plan.draw_block(1, r);
        let (fx, a) = f.eval(&x);
        let (gx, _) = g.eval(&x);
        let mut buf = Vec::with_capacity(x.len());
        Ok([fx * gx, fx, gx, rule(&x, &xp, a, &full, &mut buf), rule(&x, &xp, a, &half, &mut buf)])
    })?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let (fg, fv, gv, sf, sh) = (col(0), col(1), col(2), col(3), col(4));
    let (mf, mg) = (mean(&fv), mean(&gv));
    let direct = Estimate {
        value: mean(&fg) - mf * mg,
        se: delta_se(&[&fg, &fv, &gv], &[1.0, -mg, -mf]),
        replicates: n,
    };
    let interp = mean_se(&sf);
    let diff_se = delta_se(&[&fg, &fv, &gv, &sf], &[1.0, -mg, -mf, -1.0]);
    let budget = (interp.value - mean(&sh)).abs();
    rep.term("direct_cov", direct);
    rep.term("interpolated_cov", interp);
    rep.constant("t_nodes", t_nodes as f64);
    rep.constant("quadrature_budget", budget);
    rep.check(BoundCheck::new("agreement", (direct.value - interp.value).abs(), diff_se, 0.0, budget));
    Ok(rep.finish(started))
}

/// `3 |I| exp(-ε²/(8σ²))`, zero when `σ² = 0`.
pub fn finite_range_bound(max_support: f64, sigma2: f64, eps: f64) -> f64 {
    if sigma2 > 0.0 {
        3.0 * max_support * (-eps * eps / (8.0 * sigma2)).exp()
    } else {
        0.0
    }
}

/// Sprinkled decoupling through the moving-average split `X = X₁ + X₂`,
/// against `3 max(|I₁|, |I₂|) exp(-ε²/(8σ²))` with `σ² = max Var X₂`.
#[allow(clippy::too_many_arguments)]
pub fn verify_finite_range(
    model: &CovarianceModel,
    grid: &Grid,
    radius: f64,
    a1: &EventSpec,
    a2: &EventSpec,
    eps: f64,
    n: u64,
    seed: u64,
) -> Result<InequalityReport> {
    let started = Instant::now();
    positive("eps", eps)?;
    need_replicates(n)?;
    let plan = CirculantPlan::new(model, grid, seed)?;
    let split = plan.finite_range_split(radius)?;
    let e1 = compile_for(&plan, a1)?;
    let e2 = compile_for(&plan, a2)?;
    let mut sep2 = f64::INFINITY;
    for &i in e1.support() {
        let ci = grid.coords(i);
        for &j in e2.support() {
            let cj = grid.coords(j);
            let d2: f64 = ci.iter().zip(&cj).map(|(&a, &b)| ((a as f64 - b as f64) * grid.spacing).powi(2)).sum();
            sep2 = sep2.min(d2);
        }
    }
    let separation = sep2.sqrt();
    if !(separation > 2.0 * radius) {
        return Err(Error::Parameter(format!(
            "supports are {separation} apart; the truncated parts are independent only beyond 2 × radius = {}",
            2.0 * radius
        )));
    }
    let mut rep = InequalityReport::new(TheoremId::FiniteRange, seed, n);
    let rows = per_replicate(n, |r| {
        let (x1, x2) = split.draw(r);
        let x: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        Ok((e1.threshold(&x)?, e2.threshold(&x)?))
    })?;
    let (t1, t2): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let joint = both(&t1, 0.0, &t2, 0.0);
    let up1 = indicator(&t1, eps);
    let up2 = indicator(&t2, eps);
    let lhs = gap(&joint, &up1, &up2);
    let size = e1.support().len().max(e2.support().len()) as f64;
    let bound = finite_range_bound(size, split.sigma2, eps);
    rep.term("joint", mean_se(&joint));
    rep.term("shifted_up_1", mean_se(&up1));
    rep.term("shifted_up_2", mean_se(&up2));
    rep.term("lhs", lhs);
    rep.constant("sigma2", split.sigma2);
    rep.constant("radius", radius);
    rep.constant("separation", separation);
    rep.constant("max_support", size);
    rep.constant("eps", eps);
    rep.check(BoundCheck::new("upper", lhs.value, lhs.se, bound, 0.0));
    Ok(rep.finish(started))
}

/// `P[A₁∩A₂] - P[A₁] P[X+ε ∈ A₂] ≤ exp(-ε²/(8‖K‖∞ρ²))`.
pub fn verify_sdi2<F: GaussianField + ?Sized>(
    plan: &F,
    a1: &EventSpec,
    a2: &EventSpec,
    eps: f64,
    n: u64,
) -> Result<InequalityReport> {
    let started = Instant::now();
    positive("eps", eps)?;
    need_replicates(n)?;
    let pair = Pair::new(plan, a1, a2)?;
    let mut rep = InequalityReport::new(TheoremId::OneSided, plan.base_seed(), n);
    let rho = pair.rho()?;
    let knorm = pair.sup_all();
    let bound_at = |r: f64| if r > 0.0 { (-eps * eps / (8.0 * knorm * r * r)).exp() } else { 0.0 };
    let bound = bound_at(rho);
    let budget = bound_at((rho + RHO_ACCURACY).min(1.0)) - bound;
    let (t1, t2) = pair.thresholds(plan, n)?;
    let joint = both(&t1, 0.0, &t2, 0.0);
    let p1 = indicator(&t1, 0.0);
    let up2 = indicator(&t2, eps);
    let lhs = gap(&joint, &p1, &up2);
    rep.term("joint", mean_se(&joint));
    rep.term("marginal_1", mean_se(&p1));
    rep.term("shifted_up_2", mean_se(&up2));
    rep.term("lhs", lhs);
    rep.constant("rho", rho);
    rep.constant("k_sup", knorm);
    rep.constant("eps", eps);
    if rho == 0.0 && lhs.value > 3.0 * lhs.se {
        rep.note("maximum correlation is zero but the estimated gap is positive beyond noise");
    }
    rep.check(BoundCheck::new("upper", lhs.value, lhs.se, bound, budget));
    Ok(rep.finish(started))
}

/// `κ = 2 + δ₁^{-1/2} max(0, -Φ⁻¹(δ₂))`.
pub fn errorless_constant(delta1: f64, delta2: f64) -> f64 {
    2.0 + delta1.powf(-0.5) * (-std_quantile(delta2)).max(0.0)
}

/// Errorless decoupling at `ε = κ‖K‖∞ρ`. Unmet hypotheses give a
/// not-applicable report.
pub fn verify_sdi3<F: GaussianField + ?Sized>(
    plan: &F,
    a1: &EventSpec,
    a2: &EventSpec,
    delta1: f64,
    delta2: f64,
    n: u64,
) -> Result<InequalityReport> {
    let started = Instant::now();
    for (name, d) in [("delta1", delta1), ("delta2", delta2)] {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::Parameter(format!("{name} must lie in (0, 1), got {d}")));
        }
    }
    need_replicates(n)?;
    let pair = Pair::new(plan, a1, a2)?;
    let mut rep = InequalityReport::new(TheoremId::Errorless, plan.base_seed(), n);
    let rho = pair.rho()?;
    let knorm = pair.sup_all();
    let kappa = errorless_constant(delta1, delta2);
    let eps = kappa * knorm * rho;
    rep.constant("rho", rho);
    rep.constant("k_sup", knorm);
    rep.constant("kappa", kappa);
    rep.constant("eps", eps);
    rep.constant("delta1", delta1);
    rep.constant("delta2", delta2);
    if rho > 1.0 - delta1 {
        rep.note(format!("maximum correlation {rho} exceeds 1 - delta1"));
        return Ok(rep.finish(started));
    }
    let (t1, t2) = pair.thresholds(plan, n)?;
    let p1 = indicator(&t1, 0.0);
    let p2 = indicator(&t2, 0.0);
    let m1 = mean_se(&p1);
    let m2 = mean_se(&p2);
    rep.term("marginal_1", m1);
    rep.term("marginal_2", m2);
    if m1.value.max(m2.value) < delta2 {
        rep.note(format!("both estimated marginals fall below delta2 = {delta2}"));
        return Ok(rep.finish(started));
    }
    let joint = both(&t1, 0.0, &t2, 0.0);
    let up1 = indicator(&t1, eps);
    let up2 = indicator(&t2, eps);
    let lhs = gap(&joint, &up1, &up2);
    rep.term("joint", mean_se(&joint));
    rep.term("shifted_up_1", mean_se(&up1));
    rep.term("shifted_up_2", mean_se(&up2));
    rep.term("lhs", lhs);
    rep.check(BoundCheck::new("upper", lhs.value, lhs.se, 0.0, 0.0));
    Ok(rep.finish(started))
}

/// `P[X+ε ∈ A] ≥ Φ(Φ⁻¹(P[A]) + ε/√‖K‖∞)` for an increasing event.
pub fn verify_isoperimetric<F: GaussianField + ?Sized>(
    plan: &F,
    a: &EventSpec,
    eps: f64,
    n: u64,
) -> Result<InequalityReport> {
    let started = Instant::now();
    if !(eps >= 0.0) {
        return Err(Error::Parameter(format!("eps must be nonnegative, got {eps}")));
    }
    need_replicates(n)?;
    let e = compile_for(plan, a)?;
    let knorm = e.support().iter().map(|&i| plan.cov(i, i)).fold(0.0, f64::max);
    if !(knorm > 0.0) {
        return Err(Error::Model("event support has zero variance".into()));
    }
    let mut rep = InequalityReport::new(TheoremId::Isoperimetric, plan.base_seed(), n);
    let t: Vec<f64> = threshold_rows(plan, std::slice::from_ref(&e), n)?.into_iter().map(|r| r[0]).collect();
    let base = indicator(&t, 0.0);
    let up = indicator(&t, eps);
    let p = mean(&base);
    let shift = eps / knorm.sqrt();
    let profile = analytic::isoperimetric_profile(p, shift)?;
    let slope = if p > 0.0 && p < 1.0 {
        let q = std_quantile(p);
        std_pdf(q + shift) / std_pdf(q)
    } else {
        0.0
    };
    let lhs = profile - mean(&up);
    let se = delta_se(&[&base, &up], &[slope, -1.0]);
    rep.term("probability", mean_se(&base));
    rep.term("shifted_probability", mean_se(&up));
    rep.constant("k_sup", knorm);
    rep.constant("eps", eps);
    rep.constant("profile", profile);
    rep.check(BoundCheck::new("profile <= shifted", lhs, se, 0.0, 0.0));
    Ok(rep.finish(started))
}

/// `P[A₁∩A₂] ≤ Φ_ρ(Φ⁻¹(P[A₁]), Φ⁻¹(P[A₂]))` with `ρ` the maximum correlation.
pub fn verify_noise_stability<F: GaussianField + ?Sized>(
    plan: &F,
    a1: &EventSpec,
    a2: &EventSpec,
    n: u64,
) -> Result<InequalityReport> {
    let started = Instant::now();
    need_replicates(n)?;
    let pair = Pair::new(plan, a1, a2)?;
    let mut rep = InequalityReport::new(TheoremId::NoiseStability, plan.base_seed(), n);
    let rho = pair.rho()?;
    rep.constant("rho", rho);
    let (t1, t2) = pair.thresholds(plan, n)?;
    let joint = both(&t1, 0.0, &t2, 0.0);
    let i1 = indicator(&t1, 0.0);
    let i2 = indicator(&t2, 0.0);
    let (p1, p2) = (mean(&i1), mean(&i2));
    rep.term("joint", mean_se(&joint));
    rep.term("marginal_1", mean_se(&i1));
    rep.term("marginal_2", mean_se(&i2));
    if p1 <= 0.0 || p1 >= 1.0 || p2 <= 0.0 || p2 >= 1.0 {
        rep.note("an estimated marginal is 0 or 1; its quantile is undefined");
        return Ok(rep.finish(started));
    }
    let (q1, q2) = (std_quantile(p1), std_quantile(p2));
    let rhs = analytic::bivariate_cdf(rho, q1, q2)?;
    let budget = analytic::bivariate_cdf((rho + RHO_ACCURACY).min(1.0), q1, q2)? - rhs;
    let d = analytic::bivariate_partials_closed(rho, q1, q2)?;
    let se = delta_se(&[&joint, &i1, &i2], &[1.0, -d.du / std_pdf(q1), -d.dv / std_pdf(q2)]);
    rep.constant("bound", rhs);
    rep.check(BoundCheck::new("joint <= bivariate", mean(&joint), se, rhs, budget));
    Ok(rep.finish(started))
}
