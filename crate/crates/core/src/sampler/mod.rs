//! Exact Gaussian samplers with counter-based seeding.
//!
//! Two plans: a pivoted Cholesky factor for arbitrary point sets, and
//! circulant embedding for stationary models on a rectangular grid. The
//! circulant plan also yields the moving-average split `X = X₁ + X₂` used by
//! the finite-range approximation.

mod circulant;
mod rng;
pub mod snapshot;

pub use circulant::{CirculantPlan, FiniteRangeSplit, Grid};
pub use rng::replicate_rng;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::CovarianceModel;
use crate::linalg;

/// Relative pivot tolerance of the dense factorization.
const PIVOT_TOL: f64 = 1e-13;

/// A centred Gaussian vector that can be sampled replicate by replicate.
pub trait GaussianField: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Covariance of coordinates `i` and `j` as realised by the sampler.
    fn cov(&self, i: usize, j: usize) -> f64;
    fn base_seed(&self) -> u64;
    /// Fill `out` with one realisation drawn from `rng`.
    fn draw_with(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);

    /// Realisation number `replicate` of stream block `block`.
    fn draw_block(&self, block: u64, replicate: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut rng = replicate_rng(self.base_seed(), block, replicate);
        self.draw_with(&mut rng, &mut out);
        out
    }

    fn draw(&self, replicate: u64) -> Vec<f64> {
        self.draw_block(0, replicate)
    }
}

/// Dense plan: `X = L Z` with `L` a pivoted Cholesky factor.
#[derive(Clone, Debug)]
pub struct DensePlan {
    cov: DMatrix<f64>,
    /// row-major `n × rank`
    factor: Vec<f64>,
    n: usize,
    rank: usize,
    seed: u64,
    pub repaired: bool,
    pub clipped_mass: f64,
}

impl DensePlan {
    pub fn new(cov: DMatrix<f64>, seed: u64) -> Result<Self> {
        let n = cov.nrows();
        if n == 0 {
            return Err(Error::Model("empty covariance matrix".into()));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Model(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let check = linalg::ensure_psd(cov)?;
        let (l, rank) = linalg::pivoted_cholesky(&check.matrix, PIVOT_TOL)?;
        let mut factor = Vec::with_capacity(n * rank);
        for i in 0..n {
            for k in 0..rank {
                factor.push(l[(i, k)]);
            }
        }
        Ok(Self {
            cov: check.matrix,
            factor,
            n,
            rank,
            seed,
            repaired: check.repaired,
            clipped_mass: check.clipped_mass,
        })
    }

    /// Plan for a model evaluated on a point set.
    pub fn from_model(model: &CovarianceModel, points: &[Vec<f64>], seed: u64) -> Result<Self> {
        let check = model.build_cov_matrix(points)?;
        Self::new(check.matrix, seed)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// The factor as an `n × n` matrix, zero beyond the numerical rank.
    pub fn factor(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in 0..self.rank {
                l[(i, k)] = self.factor[i * self.rank + k];
            }
        }
        l
    }
}

impl GaussianField for DensePlan {
    fn len(&self) -> usize {
        self.n
    }

    fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)]
    }

    fn base_seed(&self) -> u64 {
        self.seed
    }

    fn draw_with(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let z: Vec<f64> = (0..self.rank).map(|_| rng.sample(StandardNormal)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.factor[i * self.rank..(i + 1) * self.rank];
            *o = row.iter().zip(&z).map(|(a, b)| a * b).sum();
        }
    }
}

/// Either kind of plan behind one type.
#[derive(Clone, Debug)]
pub enum SamplerPlan {
    Dense(DensePlan),
    Circulant(CirculantPlan),
}

impl SamplerPlan {
    pub fn mode(&self) -> &'static str {
        match self {
            Self::Dense(_) => "dense",
            Self::Circulant(_) => "circulant",
        }
    }
}

impl GaussianField for SamplerPlan {
    fn len(&self) -> usize {
        match self {
            Self::Dense(p) => p.len(),
            Self::Circulant(p) => p.len(),
        }
    }
    fn cov(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Dense(p) => p.cov(i, j),
            Self::Circulant(p) => p.cov(i, j),
        }
    }
    fn base_seed(&self) -> u64 {
        match self {
            Self::Dense(p) => p.base_seed(),
            Self::Circulant(p) => p.base_seed(),
        }
    }
    fn draw_with(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            Self::Dense(p) => p.draw_with(rng, out),
            Self::Circulant(p) => p.draw_with(rng, out),
        }
    }
}

/// `sample + eps` coordinatewise.
pub fn shift(sample: &[f64], eps: f64) -> Vec<f64> {
    sample.iter().map(|x| x + eps).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_rank_one_factors() {
        let p = DensePlan::new(DMatrix::identity(2, 2), 1).unwrap();
        assert_eq!(p.factor(), DMatrix::identity(2, 2));
        let p = DensePlan::new(DMatrix::from_element(2, 2, 1.0), 1).unwrap();
        assert_eq!(p.factor(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]));
        for r in 0..100 {
            let x = p.draw(r);
            assert_eq!(x[0], x[1]);
        }
    }

    #[test]
    fn wishart_factor_multiplies_back() {
        let mut rng = replicate_rng(99, 0, 0);
        let a = DMatrix::from_fn(5, 8, |_, _| rng.sample::<f64, _>(StandardNormal));
        let k = &a * a.transpose();
        let l = DensePlan::new(k.clone(), 0).unwrap().factor();
        assert!((&l * l.transpose() - &k).amax() < 1e-10);
    }

    #[test]
    fn draws_are_deterministic() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let p = DensePlan::new(k, 42).unwrap();
        assert_eq!(p.draw(17), p.draw(17));
        assert_ne!(p.draw(17), p.draw(18));
        assert_ne!(p.draw(17), p.draw_block(1, 17));
    }

    #[test]
    fn shift_arithmetic() {
        let v = vec![0.1, -0.2];
        assert_eq!(shift(&v, 0.0), v);
        let s = shift(&v, 0.5);
        assert!((s[0] - 0.6).abs() < 1e-15 && (s[1] - 0.3).abs() < 1e-15);
        let back = shift(&shift(&v, 0.3), -0.3);
        assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(DensePlan::new(k, 0).is_err());
    }
}
