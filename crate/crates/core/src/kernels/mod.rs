//! Covariance kernels and dense covariance matrices.
//!
//! A point is a coordinate slice. Lattice models (the discrete Gaussian free
//! field) require integer coordinates; `ExplicitMatrix` uses one-coordinate
//! points holding a row index.

pub mod bessel;
pub mod green;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, PsdCheck};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CovarianceModel {
    /// Discrete Gaussian free field on `Z^dim`: `K(x, y) = G_dim(x - y)`.
    Gff { dim: usize },
    /// `exp(-|x - y|² / 2)`.
    BargmannFock,
    /// `(1 + |x - y|²)^{-alpha/2}`.
    Cauchy { alpha: f64 },
    /// Fourier transform of the normalised sphere measure in `R^dim`,
    /// `Γ(dim/2) (2/r)^{dim/2-1} J_{dim/2-1}(r)`, equal to 1 at `r = 0`.
    MonochromaticWave { dim: usize },
    /// `(log(e + |x - y|))^{-gamma}`, bounded by `c (log(1 + r))^{-gamma}` for `c ≥ 1`.
    PolylogDecay { c: f64, gamma: f64 },
    /// Independent standard coordinates.
    IidStandard,
    /// A user-supplied matrix indexed by point number.
    ExplicitMatrix { matrix: Vec<Vec<f64>> },
}

impl CovarianceModel {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gff { .. } => "gff",
            Self::BargmannFock => "bargmann_fock",
            Self::Cauchy { .. } => "cauchy",
            Self::MonochromaticWave { .. } => "monochromatic_wave",
            Self::PolylogDecay { .. } => "polylog_decay",
            Self::IidStandard => "iid_standard",
            Self::ExplicitMatrix { .. } => "explicit_matrix",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gff { dim } if *dim < 3 => Err(Error::Model(format!(
                "the Gaussian free field needs d ≥ 3 (got {dim}); the walk is recurrent below"
            ))),
            Self::Cauchy { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::Model(format!("Cauchy exponent must be positive, got {alpha}")))
            }
            Self::MonochromaticWave { dim } if *dim == 0 => {
                Err(Error::Model("wave dimension must be at least 1".into()))
            }
            Self::PolylogDecay { c, gamma } if !(*c >= 1.0 && *gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Model(format!("polylog decay needs c ≥ 1 and gamma > 0, got c={c} gamma={gamma}")))
            }
            Self::ExplicitMatrix { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Model("explicit covariance must be a non-empty square matrix".into()));
                }
                let scale = matrix.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
                #[allow(clippy::needless_range_loop)]
                for i in 0..n {
                    for j in 0..n {
                        let (a, b) = (matrix[i][j], matrix[j][i]);
                        if !a.is_finite() {
                            return Err(Error::Model("explicit covariance has non-finite entries".into()));
                        }
                        if (a - b).abs() > 1e-12 * scale.max(1.0) {
                            return Err(Error::Model(format!("explicit covariance not symmetric at ({i}, {j})")));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// True when the covariance depends only on `x - y`.
    pub fn is_stationary(&self) -> bool {
        !matches!(self, Self::ExplicitMatrix { .. })
    }

    /// Required point dimension, if fixed by the model.
    pub fn point_dim(&self) -> Option<usize> {
        match self {
            Self::Gff { dim } => Some(*dim),
            Self::ExplicitMatrix { .. } => Some(1),
            _ => None,
        }
    }

    /// Covariance at lag `h = x - y` for stationary models.
    pub fn cov_at_lag(&self, lag: &[f64]) -> Result<f64> {
        let r2: f64 = lag.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        Ok(match self {
            Self::Gff { dim } => {
                if lag.len() != *dim {
                    return Err(Error::Model(format!("GFF on Z^{dim} given a {}-dimensional lag", lag.len())));
                }
                let mut offset = Vec::with_capacity(*dim);
                for &v in lag {
                    let k = v.round();
                    if (v - k).abs() > 1e-9 {
                        return Err(Error::Model(format!("GFF needs lattice points, got coordinate {v}")));
                    }
                    offset.push(k as i64);
                }
                green::lattice_green(&offset)?
            }
            Self::BargmannFock => (-0.5 * r2).exp(),
            Self::Cauchy { alpha } => (1.0 + r2).powf(-0.5 * alpha),
            Self::MonochromaticWave { dim } => {
                if *dim == 1 {
                    r.cos()
                } else {
                    bessel::normalized_bessel_j(*dim as f64 / 2.0 - 1.0, r)?
                }
            }
            Self::PolylogDecay { gamma, .. } => (std::f64::consts::E + r).ln().powf(-gamma),
            Self::IidStandard => {
                if r2 == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::ExplicitMatrix { .. } => {
                return Err(Error::Model("explicit matrices have no lag representation".into()))
            }
        })
    }

    /// `K(x, y)`.
    pub fn eval_cov(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Model(format!("point dimensions differ: {} vs {}", x.len(), y.len())));
        }
        if let Self::ExplicitMatrix { matrix } = self {
            let idx = |p: &[f64]| -> Result<usize> {
                let v = p.first().copied().unwrap_or(-1.0);
                if p.len() != 1 || v < 0.0 || v.fract() != 0.0 || v as usize >= matrix.len() {
                    return Err(Error::Model(format!("explicit matrix point {p:?} is not a valid index")));
                }
                Ok(v as usize)
            };
            return Ok(matrix[idx(x)?][idx(y)?]);
        }
        let lag: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.cov_at_lag(&lag)
    }

    /// Dense covariance of a point set, checked (and if needed repaired) to be PSD.
    pub fn build_cov_matrix(&self, points: &[Vec<f64>]) -> Result<PsdCheck> {
        self.validate()?;
        if let Some(d) = self.point_dim() {
            if let Some(p) = points.iter().find(|p| p.len() != d) {
                return Err(Error::Model(format!("point {p:?} has the wrong dimension for {}", self.name())));
            }
        }
        let n = points.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_cov(&points[i], &points[j])?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        linalg::ensure_psd(m)
    }
}

/// Points of a regular grid with the given shape and spacing, row-major.
pub fn grid_points(shape: &[usize], spacing: f64) -> Vec<Vec<f64>> {
    let n: usize = shape.iter().product();
    (0..n)
        .map(|mut i| {
            let mut c = vec![0.0; shape.len()];
            for a in (0..shape.len()).rev() {
                c[a] = (i % shape[a]) as f64 * spacing;
                i /= shape[a];
            }
            c
        })
        .collect()
}

/// Explicit-matrix points `[0], [1], …, [n-1]`.
pub fn index_points(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![i as f64]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_values() {
        let bf = CovarianceModel::BargmannFock;
        assert!((bf.eval_cov(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let w = CovarianceModel::MonochromaticWave { dim: 2 };
        assert_eq!(w.eval_cov(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let c = CovarianceModel::Cauchy { alpha: 2.0 };
        assert!((c.eval_cov(&[0.0], &[1.0]).unwrap() - 0.5).abs() < 1e-15);
        let p = CovarianceModel::PolylogDecay { c: 1.0, gamma: 3.5 };
        let off = p.eval_cov(&[0.0], &[1.0]).unwrap();
        assert!((off - (1.0 + std::f64::consts::E).ln().powf(-3.5)).abs() < 1e-15);
        assert_eq!(p.eval_cov(&[0.0], &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn gff_origin() {
        let g = CovarianceModel::Gff { dim: 3 };
        let v = g.eval_cov(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((v - 1.516_386_06).abs() < 1e-6);
        assert!(g.eval_cov(&[0.5, 0.0, 0.0], &[0.0, 0.0, 0.0]).is_err());
        assert!(CovarianceModel::Gff { dim: 2 }.validate().is_err());
    }

    #[test]
    fn explicit_rejects_indefinite_and_asymmetric() {
        let bad = CovarianceModel::ExplicitMatrix { matrix: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(bad.build_cov_matrix(&index_points(2)).is_err());
        let asym = CovarianceModel::ExplicitMatrix { matrix: vec![vec![1.0, 0.1], vec![0.2, 1.0]] };
        assert!(asym.validate().is_err());
    }

    #[test]
    fn grid_points_row_major() {
        let p = grid_points(&[2, 3], 0.5);
        assert_eq!(p[1], vec![0.0, 0.5]);
        assert_eq!(p[3], vec![0.5, 0.0]);
    }
}
