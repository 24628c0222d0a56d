//! Closed-form Gaussian machinery: univariate and bivariate normal
//! distribution functions, their derivatives, two-point inequality checks,
//! the isoperimetric profile and the tail-gap scan.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quad;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Standard normal density.
pub fn std_pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Standard normal distribution function.
pub fn std_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / SQRT_2)
}

/// Upper tail `P[Z ≥ u]`.
pub fn std_sf(u: f64) -> f64 {
    0.5 * libm::erfc(u / SQRT_2)
}

/// Mills ratio `P[Z ≥ u] / φ(u)` by backward evaluation of its continued fraction.
fn mills_ratio_cf(u: f64) -> f64 {
    let mut t = u;
    for k in (1..=400).rev() {
        t = u + k as f64 / t;
    }
    1.0 / t
}

/// `ln P[Z ≥ u]`, finite for every finite `u`.
pub fn ln_std_sf(u: f64) -> f64 {
    if u.is_nan() {
        return f64::NAN;
    }
    if u < 0.0 {
        (-std_cdf(u)).ln_1p()
    } else if u < 8.0 {
        std_sf(u).ln()
    } else {
        -0.5 * u * u - LN_SQRT_2PI + mills_ratio_cf(u).ln()
    }
}

/// `ln Φ(u)`.
pub fn ln_std_cdf(u: f64) -> f64 {
    ln_std_sf(-u)
}

/// Inverse Mills ratio `φ(s) / Φ(s)`, stable for very negative `s`.
pub fn inverse_mills(s: f64) -> f64 {
    (-0.5 * s * s - LN_SQRT_2PI - ln_std_cdf(s)).exp()
}

fn ppnd16(p: f64) -> f64 {
    #[allow(clippy::excessive_precision)]
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        133.141_667_891_784_37,
        1_971.590_950_306_551_4,
        13_731.693_765_509_461,
        45_921.953_931_549_87,
        67_265.770_927_008_7,
        33_430.575_583_588_13,
        2_509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_91,
        687.187_007_492_057_9,
        5_394.196_021_424_751,
        21_213.794_301_586_597,
        39_307.895_800_092_71,
        28_729.085_735_721_943,
        5_226.495_278_852_546,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_6,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        0.689_767_334_985_1,
        0.148_103_976_427_480_07,
        0.015_198_666_563_616_457,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_9,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_9,
        0.136_929_880_922_735_8,
        0.014_875_361_290_850_615,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];
    let poly = |c: &[f64; 8], x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Standard normal quantile restricted to the open interval.
pub fn try_std_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return param(format!("quantile needs p in (0, 1), got {p}"));
    }
    Ok(std_quantile(p))
}

/// Standard normal quantile. Returns `-∞` at 0 and `+∞` at 1.
pub fn std_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let mut x = ppnd16(p);
    // Halley refinement on whichever tail carries the precision
    for _ in 0..2 {
        let err = if p < 0.5 { std_cdf(x) - p } else { (1.0 - p) - std_sf(x) };
        let dens = std_pdf(x);
        if dens == 0.0 {
            break;
        }
        let t = err / dens;
        x -= t / (1.0 + 0.5 * x * t);
    }
    x
}

/// Bivariate standard normal density with correlation `rho`.
pub fn bivariate_pdf(rho: f64, u: f64, v: f64) -> f64 {
    let s = 1.0 - rho * rho;
    if s <= 0.0 {
        return 0.0;
    }
    (-(u * u - 2.0 * rho * u * v + v * v) / (2.0 * s)).exp() / (TWO_PI * s.sqrt())
}

fn check_rho(rho: f64) -> Result<f64> {
    if rho.is_nan() || rho.abs() > 1.0 + 1e-12 {
        return param(format!("correlation {rho} outside [-1, 1]"));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// `P[Z1 ≤ u, Z2 ≤ v]` for standard normals with correlation `rho`.
///
/// Integrates the density along the correlation path from independence,
/// using the substitution `r = sin θ` which removes the endpoint singularity.
pub fn bivariate_cdf(rho: f64, u: f64, v: f64) -> Result<f64> {
    let rho = check_rho(rho)?;
    if u.is_nan() || v.is_nan() {
        return param("bivariate_cdf received NaN limits");
    }
    if u == f64::NEG_INFINITY || v == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if u == f64::INFINITY {
        return Ok(std_cdf(v));
    }
    if v == f64::INFINITY {
        return Ok(std_cdf(u));
    }
    if rho == 1.0 {
        return Ok(std_cdf(u.min(v)));
    }
    if rho == -1.0 {
        return Ok((std_cdf(u) - std_sf(v)).max(0.0));
    }
    let base = std_cdf(u) * std_cdf(v);
    if rho == 0.0 {
        return Ok(base);
    }
    let uv = u * v;
    let ss = u * u + v * v;
    let integrand = |theta: f64| {
        let s = theta.sin();
        let c2 = 1.0 - s * s;
        let num = ss - 2.0 * uv * s;
        if c2 <= 0.0 {
            return if num <= 0.0 { 1.0 / TWO_PI } else { 0.0 };
        }
        (-num / (2.0 * c2)).exp() / TWO_PI
    };
    let integral = quad::adaptive(integrand, 0.0, rho.asin(), 1e-15, 1e-14)?;
    Ok((base + integral.value).clamp(0.0, 1.0))
}

/// Partial derivatives of the bivariate distribution function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvnPartials {
    pub du: f64,
    pub dv: f64,
    pub drho: f64,
}

/// Partial derivatives for `|ρ| < 1`.
pub fn bivariate_partials(rho: f64, u: f64, v: f64) -> Result<BvnPartials> {
    if !(rho.abs() < 1.0) {
        return param(format!("derivatives need |rho| < 1, got {rho}"));
    }
    bivariate_partials_closed(rho, u, v)
}

/// Partial derivatives including the degenerate endpoints `ρ = ±1`, where
/// the one-sided derivatives are step functions (value ½ on the diagonal).
pub fn bivariate_partials_closed(rho: f64, u: f64, v: f64) -> Result<BvnPartials> {
    let rho = check_rho(rho)?;
    let one_sided = |a: f64, b: f64| -> f64 {
        if rho == 1.0 {
            std_pdf(a) * step(b - a)
        } else if rho == -1.0 {
            std_pdf(a) * step(a + b)
        } else {
            std_pdf(a) * std_cdf((b - rho * a) / (1.0 - rho * rho).sqrt())
        }
    };
    Ok(BvnPartials {
        du: one_sided(u, v),
        dv: one_sided(v, u),
        drho: bivariate_pdf(rho, u, v),
    })
}

fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// Outcome of a deterministic two-point inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

impl PointCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        Self { lhs, rhs, slack, holds: slack >= -1e-12 }
    }
}

/// Two-coordinate sprinkled bound:
/// `Φ_ρ(u, v) ≤ Φ(u) Φ(v + ε) + exp(-ε² / (8ρ²))`.
pub fn sprinkled_two_point(rho: f64, u: f64, v: f64, eps: f64) -> Result<PointCheck> {
    if !(rho > 0.0 && rho <= 1.0) {
        return param(format!("two-point sprinkled bound needs rho in (0, 1], got {rho}"));
    }
    if eps < 0.0 {
        return param("sprinkling must be nonnegative");
    }
    let lhs = bivariate_cdf(rho, u, v)?;
    let rhs = std_cdf(u) * std_cdf(v + eps) + (-eps * eps / (8.0 * rho * rho)).exp();
    Ok(PointCheck::new(lhs, rhs))
}

/// The shift multiplier `κ = 2 + (1 - ρ²)^{-1/2} max(0, -max(u, v))`.
pub fn errorless_kappa(rho: f64, u: f64, v: f64) -> f64 {
    2.0 + (1.0 - rho * rho).powf(-0.5) * (-u.max(v)).max(0.0)
}

/// Two-coordinate errorless bound: `Φ_ρ(u, v) ≤ Φ(u + κρ) Φ(v + κρ)`.
pub fn errorless_two_point(rho: f64, u: f64, v: f64) -> Result<PointCheck> {
    if !(0.0..1.0).contains(&rho) {
        return param(format!("errorless two-point bound needs rho in [0, 1), got {rho}"));
    }
    let lhs = bivariate_cdf(rho, u, v)?;
    let shift = errorless_kappa(rho, u, v) * rho;
    let rhs = std_cdf(u + shift) * std_cdf(v + shift);
    Ok(PointCheck::new(lhs, rhs))
}

/// Gaussian isoperimetric profile `Φ(Φ⁻¹(p) + t)`.
pub fn isoperimetric_profile(p: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return param(format!("probability {p} outside [0, 1]"));
    }
    Ok(std_cdf(std_quantile(p) + t))
}

/// One row of the tail-gap scan `r(u) = P[Z ≥ u] - P[Z ≥ u(1-κ)]²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailGapRow {
    pub u: f64,
    /// `r(u)` in double precision (may underflow to 0).
    pub gap: f64,
    /// `ln r(u)`, absent when `r(u) ≤ 0`.
    pub ln_gap: Option<f64>,
    /// `-ln r(u) / (κ² u²)`, absent when undefined.
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailGapScan {
    pub kappa: f64,
    pub rows: Vec<TailGapRow>,
    /// Extrapolated `u → ∞` limit of the exponent column.
    pub limit: Option<f64>,
    /// `1 / (3 - 2√2)`, the value the limit may not exceed near the critical shift.
    pub reference: f64,
}

/// Scan `r(u)` on a grid of `u` values, all tails evaluated in log scale.
pub fn tail_gap_scan(kappa: f64, grid: &[f64]) -> Result<TailGapScan> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return param(format!("kappa must lie in (0, 1), got {kappa}"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &u in grid {
        if !u.is_finite() || u < 0.0 {
            return param(format!("scan points must be finite and nonnegative, got {u}"));
        }
        let ln_single = ln_std_sf(u);
        let ln_square = 2.0 * ln_std_sf(u * (1.0 - kappa));
        let ln_gap = if ln_square < ln_single {
            Some(ln_single + (-(ln_square - ln_single).exp()).ln_1p())
        } else {
            None
        };
        let exponent = match ln_gap {
            Some(l) if u > 0.0 => Some(-l / (kappa * kappa * u * u)),
            _ => None,
        };
        rows.push(TailGapRow { u, gap: ln_gap.map_or(0.0, f64::exp), ln_gap, exponent });
    }
    let limit = extrapolate_limit(&rows);
    Ok(TailGapScan { kappa, rows, limit, reference: 1.0 / (3.0 - 2.0 * SQRT_2) })
}

/// Least-squares fit of `E(u) ≈ L + (a + b ln u) / u²` over the upper half of
/// the scan; returns `L`.
fn extrapolate_limit(rows: &[TailGapRow]) -> Option<f64> {
    let u_max = rows.iter().filter(|r| r.exponent.is_some()).map(|r| r.u).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.exponent.map(|e| (r.u, e)))
        .filter(|(u, _)| *u >= 0.5 * u_max && *u >= 2.0)
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let design = nalgebra::DMatrix::from_fn(pts.len(), 3, |i, j| {
        let u = pts[i].0;
        match j {
            0 => 1.0,
            1 => 1.0 / (u * u),
            _ => u.ln() / (u * u),
        }
    });
    let target = nalgebra::DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let svd = design.svd(true, true);
    let coef = svd.solve(&target, 1e-14).ok()?;
    Some(coef[0])
}

/// Evenly spaced scan grid `step, 2·step, …, u_max`.
pub fn scan_grid(u_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && u_max >= step) {
        return Err(Error::Parameter(format!("bad scan grid u_max={u_max} step={step}")));
    }
    let n = (u_max / step + 1e-9).floor() as usize;
    Ok((1..=n).map(|k| k as f64 * step).collect())
}
