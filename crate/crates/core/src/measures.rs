//! Correlation quantifiers: sup cross-covariance, capacity and the maximum
//! correlation coefficient, plus the chain of inequalities relating them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, submatrix};

/// Energies below this are reported as infinite capacity.
pub const INFINITE_CAPACITY_ENERGY: f64 = 1e-14;
/// Relative ridge applied to near-singular blocks by default.
pub const DEFAULT_RIDGE: f64 = 1e-10;

fn nonempty(name: &str, idx: &[usize], n: usize) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::Parameter(format!("index set {name} is empty")));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::Parameter(format!("index {bad} in {name} is out of range for a {n}×{n} matrix")));
    }
    Ok(())
}

/// `max_{i ∈ I1, j ∈ I2} |K(i, j)|`.
pub fn sup_cross_cov(k: &DMatrix<f64>, i1: &[usize], i2: &[usize]) -> Result<f64> {
    nonempty("I1", i1, k.nrows())?;
    nonempty("I2", i2, k.nrows())?;
    Ok(i1.iter().flat_map(|&i| i2.iter().map(move |&j| k[(i, j)].abs())).fold(0.0, f64::max))
}

/// Sign pattern of a cross-covariance block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossSign {
    /// every entry is ≥ 0 (includes the all-zero block)
    Nonnegative,
    /// every entry is ≤ 0 and some entry is < 0
    Nonpositive,
    Mixed,
}

pub fn cross_sign(k: &DMatrix<f64>, i1: &[usize], i2: &[usize]) -> CrossSign {
    let vals = || i1.iter().flat_map(|&i| i2.iter().map(move |&j| k[(i, j)]));
    if vals().all(|v| v >= 0.0) {
        CrossSign::Nonnegative
    } else if vals().all(|v| v <= 0.0) {
        CrossSign::Nonpositive
    } else {
        CrossSign::Mixed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// `1 / energy`, or `+∞` when the energy vanishes
    pub value: f64,
    pub infinite: bool,
    /// minimising probability vector, aligned with the index set
    pub measure: Vec<f64>,
    pub energy: f64,
    /// Frank–Wolfe duality gap; the optimal energy lies in `[energy - gap, energy]`
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `Cap(I) = 1 / min_{μ ∈ simplex(I)} μᵀ K μ` by Frank–Wolfe with away steps
/// and exact line search. Stops when the duality gap is at most
/// `tol · energy`.
pub fn capacity(k: &DMatrix<f64>, idx: &[usize], tol: f64) -> Result<CapacityResult> {
    capacity_with_limit(k, idx, tol, 5_000_000)
}

pub fn capacity_with_limit(k: &DMatrix<f64>, idx: &[usize], tol: f64, max_iter: usize) -> Result<CapacityResult> {
    nonempty("I", idx, k.nrows())?;
    if !(tol > 0.0) {
        return Err(Error::Parameter("capacity tolerance must be positive".into()));
    }
    let kk = linalg::ensure_psd(submatrix(k, idx, idx))?.matrix;
    let n = idx.len();
    let start = (0..n).fold(0, |b, i| if kk[(i, i)] < kk[(b, b)] { i } else { b });
    let mut mu = vec![0.0; n];
    mu[start] = 1.0;
    let mut kmu: Vec<f64> = (0..n).map(|i| kk[(i, start)]).collect();
    let mut energy = kk[(start, start)];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let s = (0..n).fold(0, |b, i| if kmu[i] < kmu[b] { i } else { b });
        gap = (2.0 * (energy - kmu[s])).max(0.0);
        if energy < INFINITE_CAPACITY_ENERGY || gap <= tol * energy.max(1e-300) {
            converged = true;
            break;
        }
        let a = (0..n)
            .filter(|&i| mu[i] > 0.0)
            .fold(usize::MAX, |b, i| if b == usize::MAX || kmu[i] > kmu[b] { i } else { b });
        let away_gap = 2.0 * (kmu[a] - energy);
        if gap >= away_gap {
            let curv = kk[(s, s)] - 2.0 * kmu[s] + energy;
            let step = if curv > 0.0 { ((energy - kmu[s]) / curv).clamp(0.0, 1.0) } else { 1.0 };
            for i in 0..n {
                mu[i] *= 1.0 - step;
                kmu[i] = (1.0 - step) * kmu[i] + step * kk[(i, s)];
            }
            mu[s] += step;
        } else {
            let max_step = mu[a] / (1.0 - mu[a]);
            let curv = energy - 2.0 * kmu[a] + kk[(a, a)];
            let step = if curv > 0.0 { ((kmu[a] - energy) / curv).min(max_step) } else { max_step };
            for i in 0..n {
                mu[i] *= 1.0 + step;
                kmu[i] = (1.0 + step) * kmu[i] - step * kk[(i, a)];
            }
            mu[a] -= step;
            if step == max_step || mu[a] < 0.0 {
                mu[a] = 0.0;
            }
        }
        iterations += 1;
        if iterations % 2048 == 0 {
            // refresh against drift
            let total: f64 = mu.iter().sum();
            mu.iter_mut().for_each(|m| *m /= total);
            for i in 0..n {
                kmu[i] = (0..n).filter(|&j| mu[j] > 0.0).map(|j| kk[(i, j)] * mu[j]).sum();
            }
        }
        energy = mu.iter().zip(&kmu).map(|(a, b)| a * b).sum();
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= total);
    let infinite = energy < INFINITE_CAPACITY_ENERGY;
    Ok(CapacityResult {
        value: if infinite { f64::INFINITY } else { 1.0 / energy },
        infinite,
        measure: mu,
        energy,
        gap,
        iterations,
        converged,
    })
}

/// How the whitening ridge is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ridge {
    /// No ridge on well-conditioned blocks; `1e-10 · trace` on blocks whose
    /// smallest eigenvalue falls below that.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCorrResult {
    pub rho: f64,
    /// coefficients on `I1` of the optimal linear combination
    pub alpha: Vec<f64>,
    /// coefficients on `I2`
    pub beta: Vec<f64>,
    pub ridge: [f64; 2],
}

/// Largest canonical correlation between `X_{I1}` and `X_{I2}`.
pub fn max_corr(k: &DMatrix<f64>, i1: &[usize], i2: &[usize], ridge: Ridge) -> Result<MaxCorrResult> {
    nonempty("I1", i1, k.nrows())?;
    nonempty("I2", i2, k.nrows())?;
    let block = |idx: &[usize]| -> Result<(DMatrix<f64>, f64)> {
        let mut b = submatrix(k, idx, idx);
        let r = match ridge {
            Ridge::Fixed(r) if r >= 0.0 => r,
            Ridge::Fixed(r) => return Err(Error::Parameter(format!("ridge must be nonnegative, got {r}"))),
            Ridge::Auto => {
                let trace: f64 = b.diagonal().iter().sum();
                if linalg::min_eigenvalue(&b) > DEFAULT_RIDGE * trace {
                    0.0
                } else {
                    DEFAULT_RIDGE * trace
                }
            }
        };
        for i in 0..b.nrows() {
            b[(i, i)] += r;
        }
        Ok((linalg::inv_sqrt_spd(&b)?, r))
    };
    let (w1, r1) = block(i1)?;
    let (w2, r2) = block(i2)?;
    let m = &w1 * submatrix(k, i1, i2) * &w2;
    let svd = m.svd(true, true);
    let (top, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let sigma = svd.singular_values[top];
    let u = svd.u.as_ref().unwrap().column(top).into_owned();
    let v = svd.v_t.as_ref().unwrap().row(top).transpose();
    let alpha = (&w1 * u).iter().cloned().collect();
    let beta = (&w2 * v).iter().cloned().collect();
    Ok(MaxCorrResult { rho: sigma.clamp(0.0, 1.0), alpha, beta, ridge: [r1, r2] })
}

/// One inequality of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub name: String,
    pub smaller: f64,
    pub larger: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub rho: f64,
    pub max_normalized_entry: f64,
    pub sup_cross: f64,
    pub sup_all: f64,
    pub min_cross: f64,
    pub cap1: f64,
    pub cap2: f64,
    pub capacity_lower: f64,
    /// `√(Cap1 Cap2) ‖K_{I1,I2}‖_∞`, always computed
    pub capacity_upper: f64,
    /// whether the upper bound is a checked claim (free field only)
    pub upper_checked: bool,
    pub links: Vec<ChainLink>,
    pub holds: bool,
}

/// Evaluate `1 ≥ ρ ≥ max |K_ij|/√(K_ii K_jj) ≥ ‖K12‖∞/‖K‖∞`, the capacity
/// lower bound and, when `free_field`, the capacity upper bound.
pub fn bound_chain_report(k: &DMatrix<f64>, i1: &[usize], i2: &[usize], free_field: bool) -> Result<ChainReport> {
    let rho = max_corr(k, i1, i2, Ridge::Auto)?.rho;
    let sup_cross = sup_cross_cov(k, i1, i2)?;
    let all: Vec<usize> = i1.iter().chain(i2).cloned().collect();
    let sup_all = sup_cross_cov(k, &all, &all)?;
    let mut max_norm: f64 = 0.0;
    let mut min_cross = f64::INFINITY;
    for &i in i1 {
        for &j in i2 {
            let d = (k[(i, i)] * k[(j, j)]).sqrt();
            if d > 0.0 {
                max_norm = max_norm.max(k[(i, j)].abs() / d);
            }
            min_cross = min_cross.min(k[(i, j)]);
        }
    }
    let c1 = capacity(k, i1, 1e-9)?;
    let c2 = capacity(k, i2, 1e-9)?;
    let cap_prod = (c1.value * c2.value).sqrt();
    let rel_gap = c1.gap / c1.energy.max(1e-300) + c2.gap / c2.energy.max(1e-300);
    let capacity_lower = cap_prod * min_cross;
    let capacity_upper = cap_prod * sup_cross;
    let link = |name: &str, smaller: f64, larger: f64, extra: f64| {
        let tolerance = 1e-9 + extra;
        ChainLink { name: name.into(), smaller, larger, tolerance, holds: smaller <= larger + tolerance }
    };
    let mut links = vec![
        link("rho <= 1", rho, 1.0, 0.0),
        link("max normalized entry <= rho", max_norm, rho, 0.0),
        link("sup cross / sup all <= max normalized entry", sup_cross / sup_all.max(1e-300), max_norm, 0.0),
        link("capacity lower bound <= rho", capacity_lower, rho, rel_gap * capacity_lower.abs()),
    ];
    if free_field {
        links.push(link("rho <= capacity upper bound", rho, capacity_upper, rel_gap * capacity_upper));
    }
    let holds = links.iter().all(|l| l.holds);
    Ok(ChainReport {
        rho,
        max_normalized_entry: max_norm,
        sup_cross,
        sup_all,
        min_cross,
        cap1: c1.value,
        cap2: c2.value,
        capacity_lower,
        capacity_upper,
        upper_checked: free_field,
        links,
        holds,
    })
}

/// Lattice points of `Z^d` within Euclidean distance `r` of `center`.
pub fn lattice_ball(center: &[i64], r: f64) -> Vec<Vec<f64>> {
    let d = center.len();
    let reach = r.floor() as i64;
    let side = (2 * reach + 1) as usize;
    let mut out = Vec::new();
    for mut i in 0..side.pow(d as u32) {
        let mut p = vec![0.0; d];
        let mut r2 = 0.0;
        for a in (0..d).rev() {
            let off = (i % side) as i64 - reach;
            i /= side;
            r2 += (off * off) as f64;
            p[a] = (center[a] + off) as f64;
        }
        if r2 <= r * r + 1e-9 {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(r: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0])
    }

    #[test]
    fn sup_cross_examples() {
        assert_eq!(sup_cross_cov(&DMatrix::identity(4, 4), &[0, 1], &[2, 3]).unwrap(), 0.0);
        assert_eq!(sup_cross_cov(&two(0.3), &[0], &[1]).unwrap(), 0.3);
        assert!(sup_cross_cov(&two(0.3), &[], &[1]).is_err());
    }

    #[test]
    fn identity_capacity_is_cardinality() {
        for m in 1..=20 {
            let c = capacity(&DMatrix::identity(m, m), &(0..m).collect::<Vec<_>>(), 1e-12).unwrap();
            assert!((c.value - m as f64).abs() < 1e-9, "m={m}");
            assert!(c.measure.iter().all(|&x| (x - 1.0 / m as f64).abs() < 1e-9));
        }
    }

    #[test]
    fn zero_matrix_has_infinite_capacity() {
        let c = capacity(&DMatrix::zeros(3, 3), &[0, 1, 2], 1e-8).unwrap();
        assert!(c.infinite && c.value.is_infinite());
    }

    #[test]
    fn max_corr_simple_cases() {
        let r = max_corr(&two(-0.3), &[0], &[1], Ridge::Auto).unwrap();
        assert!((r.rho - 0.3).abs() < 1e-12);
        let r = max_corr(&two(1.0), &[0], &[1], Ridge::Auto).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12);
        let r = max_corr(&DMatrix::identity(4, 4), &[0, 1], &[2, 3], Ridge::Auto).unwrap();
        assert_eq!(r.rho, 0.0);
        let singular = DMatrix::from_element(2, 2, 1.0);
        let k = DMatrix::from_fn(3, 3, |i, j| if i < 2 && j < 2 { singular[(i, j)] } else if i == j { 1.0 } else { 0.0 });
        assert!(max_corr(&k, &[0, 1], &[2], Ridge::Fixed(0.0)).is_err());
        assert!(max_corr(&k, &[0, 1], &[2], Ridge::Auto).is_ok());
    }

    #[test]
    fn chain_collapses_for_two_points() {
        let rep = bound_chain_report(&two(0.3), &[0], &[1], false).unwrap();
        assert!(rep.holds);
        assert!((rep.rho - 0.3).abs() < 1e-12);
        assert!((rep.max_normalized_entry - 0.3).abs() < 1e-15);
        let rep = bound_chain_report(&DMatrix::identity(4, 4), &[0, 1], &[2, 3], false).unwrap();
        assert!(rep.holds && rep.rho == 0.0 && rep.sup_cross == 0.0);
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(lattice_ball(&[0, 0, 0], 1.0).len(), 7);
        assert_eq!(lattice_ball(&[0, 0], 2.0).len(), 13);
    }
}
