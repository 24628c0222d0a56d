use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points of `(R/√d) Z^d` near the spheres of radii `6R` and `8R`.
///
/// Every continuous path from `B(5R)` to `∂B(10R)` meets both spheres, and
/// each meeting point lies within `R/2` (the covering radius of the lattice)
/// of a point of the corresponding shell, so the path crosses the annuli
/// `B(x, R) → ∂B(x, 2R)` around one inner and one outer point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub dim: usize,
    pub radius: f64,
    pub inner: Vec<Vec<f64>>,
    pub outer: Vec<Vec<f64>>,
    /// `max(|inner|, |outer|)`
    pub n_d: usize,
    /// minimal distance between an inner and an outer point
    pub separation: f64,
}

/// Integer vectors `m` in the cube `|m_k| ≤ reach`, in lexicographic order.
fn cube(dim: usize, reach: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * reach + 1) as usize;
    (0..side.pow(dim as u32)).map(move |mut i| {
        let mut m = vec![0i64; dim];
        for k in (0..dim).rev() {
            m[k] = (i % side) as i64 - reach;
            i /= side;
        }
        m
    })
}

fn norm2(m: &[i64]) -> i64 {
    m.iter().map(|x| x * x).sum()
}

pub fn annulus_covering(dim: usize, radius: f64) -> Result<Covering> {
    if !(2..=4).contains(&dim) {
        return Err(Error::Parameter(format!("annulus covering is provided for 2 ≤ d ≤ 4, got {dim}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    // |m| (R/√d) ∈ [s - R/2, s + R/2]  ⇔  (2s/R - 1)² d ≤ 4|m|² ≤ (2s/R + 1)² d
    let d = dim as i64;
    let reach = (8.5 * (dim as f64).sqrt()).ceil() as i64;
    let mut inner_m = Vec::new();
    let mut outer_m = Vec::new();
    for m in cube(dim, reach) {
        let q = 4 * norm2(&m);
        if (121 * d..=169 * d).contains(&q) {
            inner_m.push(m);
        } else if (225 * d..=289 * d).contains(&q) {
            outer_m.push(m);
        }
    }
    let mut min_sep = i64::MAX;
    for a in &inner_m {
        for b in &outer_m {
            let s: i64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            min_sep = min_sep.min(s);
        }
    }
    // distance ≥ R  ⇔  Σ (m - m')² ≥ d
    if min_sep < d {
        return Err(Error::Numerical("covering shells closer than R".into()));
    }
    let h = radius / (dim as f64).sqrt();
    let scale = |v: Vec<Vec<i64>>| -> Vec<Vec<f64>> {
        v.into_iter().map(|m| m.into_iter().map(|x| x as f64 * h).collect()).collect()
    };
    let n_d = inner_m.len().max(outer_m.len());
    Ok(Covering {
        dim,
        radius,
        separation: (min_sep as f64).sqrt() * h,
        inner: scale(inner_m),
        outer: scale(outer_m),
        n_d,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialBound {
    pub value: f64,
    /// number of unit balls (centres on `(2/√d) Z^d`) meeting `B(2R)`
    pub covering_count: usize,
}

/// Markov bound `count · sup_bound / |ℓ|` on the annulus-crossing probability
/// at level `ℓ < 0`, where `count` unit balls cover `B(2R)`.
pub fn initial_bound(ell: f64, radius: f64, sup_bound: f64, dim: usize) -> Result<InitialBound> {
    if !(ell < 0.0) {
        return Err(Error::Parameter(format!("level must be negative, got {ell}")));
    }
    if !(radius > 0.0 && sup_bound >= 0.0) || dim == 0 {
        return Err(Error::Parameter("need R > 0, sup_bound ≥ 0 and d ≥ 1".into()));
    }
    // centre p = 2m/√d meets B(2R) when |p| < 2R + 1  ⇔  4|m|² < d (2R + 1)²
    let limit = dim as f64 * (2.0 * radius + 1.0).powi(2);
    let reach = ((2.0 * radius + 1.0) * (dim as f64).sqrt() / 2.0).ceil() as i64;
    let covering_count = cube(dim, reach).filter(|m| ((4 * norm2(m)) as f64) < limit).count();
    Ok(InitialBound { value: covering_count as f64 * sup_bound / ell.abs(), covering_count })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separation_at_least_radius() {
        for d in 2..=3 {
            for r in [1.0, 3.5, 100.0] {
                let c = annulus_covering(d, r).unwrap();
                assert!(c.separation >= r * (1.0 - 1e-12), "d={d} r={r}");
            }
        }
        let c = annulus_covering(2, 1.0).unwrap();
        assert!(c.separation >= 1.0);
    }

    #[test]
    fn count_is_scale_free() {
        let a = annulus_covering(2, 1.0).unwrap();
        let b = annulus_covering(2, 37.0).unwrap();
        assert_eq!(a.n_d, b.n_d);
        assert_eq!(a.inner.len(), b.inner.len());
    }

    #[test]
    fn initial_bound_scaling() {
        let a = initial_bound(-100.0, 4.0, 2.0, 2).unwrap();
        assert_eq!(a.value, a.covering_count as f64 * 2.0 / 100.0);
        let b = initial_bound(-50.0, 4.0, 2.0, 2).unwrap();
        assert!((b.value - 2.0 * a.value).abs() < 1e-12);
        assert!(initial_bound(0.0, 4.0, 2.0, 2).is_err());
        // unit balls needed grow like R^d
        let big = initial_bound(-1.0, 64.0, 1.0, 2).unwrap().covering_count as f64;
        let small = initial_bound(-1.0, 32.0, 1.0, 2).unwrap().covering_count as f64;
        assert!((big / small - 4.0).abs() < 0.1);
    }
}
