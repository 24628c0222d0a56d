//! Circulant embedding of stationary models on rectangular grids.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{replicate_rng, GaussianField};
use crate::error::{Error, Result};
use crate::kernels::CovarianceModel;

/// Largest clipped negative spectral mass, relative to the total, accepted by an embedding.
pub const SPECTRAL_CLIP_TOL: f64 = 1e-6;

/// Rectangular grid `∏ [0, shape_k)` with physical spacing; points are row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub spacing: f64,
}

impl Grid {
    pub fn new(shape: Vec<usize>, spacing: f64) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Parameter(format!("grid shape {shape:?} must be non-empty with positive sides")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Parameter(format!("grid spacing must be positive, got {spacing}")));
        }
        Ok(Self { shape, spacing })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.shape.len()];
        for a in (0..self.shape.len()).rev() {
            c[a] = idx % self.shape[a];
            idx /= self.shape[a];
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.shape).fold(0, |acc, (c, s)| acc * s + c)
    }

    pub fn contains(&self, coords: &[i64]) -> bool {
        coords.len() == self.shape.len()
            && coords.iter().zip(&self.shape).all(|(&c, &s)| c >= 0 && (c as usize) < s)
    }

    /// Physical coordinates of every grid point.
    pub fn points(&self) -> Vec<Vec<f64>> {
        crate::kernels::grid_points(&self.shape, self.spacing)
    }
}

/// In-place multidimensional FFT over a row-major buffer.
struct NdFft {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for NdFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "NdFft({:?})", self.shape)
    }
}

impl NdFft {
    fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let total = buf.len();
        let mut scratch = vec![Complex64::default(); total];
        for (axis, &n) in self.shape.iter().enumerate() {
            let stride: usize = self.shape[axis + 1..].iter().product();
            let outer = total / (n * stride);
            // gather lines of this axis contiguously
            let mut line = 0;
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for k in 0..n {
                        scratch[line * n + k] = buf[base + k * stride];
                    }
                    line += 1;
                }
            }
            let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
            plan.process(&mut scratch);
            let mut line = 0;
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for k in 0..n {
                        buf[base + k * stride] = scratch[line * n + k];
                    }
                    line += 1;
                }
            }
        }
    }
}

/// Stationary field on a grid, sampled through a torus of `padding ×` the grid extent.
#[derive(Clone, Debug)]
pub struct CirculantPlan {
    model: CovarianceModel,
    grid: Grid,
    torus: Vec<usize>,
    /// covariance on the torus, indexed by wrapped lag
    wrapped: Vec<f64>,
    /// retained (clipped) eigenvalues of the circulant
    spectrum: Vec<f64>,
    fft: Arc<NdFft>,
    seed: u64,
    pub clipped_mass: f64,
}

impl CirculantPlan {
    /// Smallest torus (padding 2, 4, 8 or 16 per axis) whose embedding is
    /// nonnegative up to the clipping tolerance.
    pub fn new(model: &CovarianceModel, grid: &Grid, seed: u64) -> Result<Self> {
        let mut out = Self::with_padding(model, grid, 2, seed);
        for padding in [4, 8, 16] {
            match out {
                Err(Error::Model(ref m)) if m.contains("negative spectral mass") => {
                    out = Self::with_padding(model, grid, padding, seed);
                }
                _ => break,
            }
        }
        out
    }

    pub fn with_padding(model: &CovarianceModel, grid: &Grid, padding: usize, seed: u64) -> Result<Self> {
        model.validate()?;
        if !model.is_stationary() {
            return Err(Error::Model(format!("{} is not stationary; use a dense plan", model.name())));
        }
        if padding < 2 {
            return Err(Error::Parameter("circulant padding must be at least 2".into()));
        }
        if let Some(d) = model.point_dim() {
            if d != grid.dim() {
                return Err(Error::Model(format!("{} needs {d}-dimensional grids", model.name())));
            }
        }
        if matches!(model, CovarianceModel::Gff { .. }) && grid.spacing != 1.0 {
            return Err(Error::Model("lattice models need grid spacing 1".into()));
        }
        let torus: Vec<usize> = grid.shape.iter().map(|&n| padding * n).collect();
        let total: usize = torus.iter().product();
        let tgrid = Grid { shape: torus.clone(), spacing: grid.spacing };
        let mut wrapped = vec![0.0; total];
        let mut lag = vec![0.0; torus.len()];
        for (i, w) in wrapped.iter_mut().enumerate() {
            let c = tgrid.coords(i);
            for a in 0..c.len() {
                lag[a] = c[a].min(torus[a] - c[a]) as f64 * grid.spacing;
            }
            *w = model.cov_at_lag(&lag)?;
        }
        let fft = Arc::new(NdFft::new(&torus));
        let mut buf: Vec<Complex64> = wrapped.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.run(&mut buf, false);
        let total_mass: f64 = buf.iter().map(|z| z.re.abs()).sum();
        let clipped: f64 = buf.iter().filter(|z| z.re < 0.0).map(|z| -z.re).sum();
        if clipped > SPECTRAL_CLIP_TOL * total_mass {
            return Err(Error::Model(format!(
                "circulant embedding has negative spectral mass {:.3e} of total; \
                 retry with padding factor {}",
                clipped / total_mass,
                2 * padding
            )));
        }
        let spectrum = buf.iter().map(|z| z.re.max(0.0)).collect();
        Ok(Self {
            model: model.clone(),
            grid: grid.clone(),
            torus,
            wrapped,
            spectrum,
            fft,
            seed,
            clipped_mass: clipped,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn torus_shape(&self) -> &[usize] {
        &self.torus
    }

    fn torus_index_of_grid(&self, i: usize) -> usize {
        let c = self.grid.coords(i);
        c.iter().zip(&self.torus).fold(0, |acc, (c, s)| acc * s + c)
    }

    fn wrapped_lag_index(&self, i: usize, j: usize) -> usize {
        let a = self.grid.coords(i);
        let b = self.grid.coords(j);
        let mut idx = 0;
        for k in 0..a.len() {
            let m = self.torus[k] as i64;
            let d = (a[k] as i64 - b[k] as i64).rem_euclid(m) as usize;
            idx = idx * self.torus[k] + d;
        }
        idx
    }

    fn extract(&self, buf: &[Complex64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = buf[self.torus_index_of_grid(i)].re;
        }
    }

    /// Moving-average split with truncation radius `radius` (physical units).
    pub fn finite_range_split(&self, radius: f64) -> Result<FiniteRangeSplit> {
        FiniteRangeSplit::new(self, radius)
    }
}

impl GaussianField for CirculantPlan {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn cov(&self, i: usize, j: usize) -> f64 {
        self.wrapped[self.wrapped_lag_index(i, j)]
    }

    fn base_seed(&self) -> u64 {
        self.seed
    }

    fn draw_with(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let m = self.spectrum.len() as f64;
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .map(|&l| {
                let s = (l / m).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.run(&mut buf, false);
        self.extract(&buf, out);
    }
}

/// `X = X₁ + X₂` with `X₁ = (q 1_{|y| ≤ radius}) ⋆ W`, `X₂ = (q 1_{|y| > radius}) ⋆ W`,
/// where `q` is the inverse-Fourier square root of the embedded spectrum.
#[derive(Clone, Debug)]
pub struct FiniteRangeSplit {
    plan: CirculantPlan,
    pub radius: f64,
    inner_hat: Vec<Complex64>,
    outer_hat: Vec<Complex64>,
    /// `max_i Var[X₂(i)] = Σ_{|y| > radius} q(y)²`
    pub sigma2: f64,
    /// the moving-average kernel on the torus
    pub kernel: Vec<f64>,
}

impl FiniteRangeSplit {
    fn new(plan: &CirculantPlan, radius: f64) -> Result<Self> {
        if !matches!(plan.model, CovarianceModel::BargmannFock | CovarianceModel::Cauchy { .. }) {
            return Err(Error::Model(format!(
                "moving-average split is provided for bargmann_fock and cauchy, not {}",
                plan.model.name()
            )));
        }
        if !(radius >= plan.grid.spacing) {
            return Err(Error::Parameter(format!(
                "truncation radius {radius} is below one grid cell ({})",
                plan.grid.spacing
            )));
        }
        let m = plan.spectrum.len();
        let mut q: Vec<Complex64> = plan.spectrum.iter().map(|&l| Complex64::new(l.sqrt(), 0.0)).collect();
        plan.fft.run(&mut q, true);
        let kernel: Vec<f64> = q.iter().map(|z| z.re / m as f64).collect();
        let tgrid = Grid { shape: plan.torus.clone(), spacing: plan.grid.spacing };
        let mut inner = vec![Complex64::default(); m];
        let mut outer = vec![Complex64::default(); m];
        let mut sigma2 = 0.0;
        for (i, &v) in kernel.iter().enumerate() {
            let c = tgrid.coords(i);
            let r2: f64 = c
                .iter()
                .zip(&plan.torus)
                .map(|(&c, &s)| {
                    let d = c.min(s - c) as f64 * plan.grid.spacing;
                    d * d
                })
                .sum();
            if r2.sqrt() <= radius {
                inner[i] = Complex64::new(v, 0.0);
            } else {
                outer[i] = Complex64::new(v, 0.0);
                sigma2 += v * v;
            }
        }
        plan.fft.run(&mut inner, false);
        plan.fft.run(&mut outer, false);
        Ok(Self { plan: plan.clone(), radius, inner_hat: inner, outer_hat: outer, sigma2, kernel })
    }

    pub fn plan(&self) -> &CirculantPlan {
        &self.plan
    }

    /// Both parts of one realisation, restricted to the grid.
    pub fn draw_with(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let m = self.inner_hat.len();
        let mut w: Vec<Complex64> =
            (0..m).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect();
        self.plan.fft.run(&mut w, false);
        let mut a: Vec<Complex64> = w.iter().zip(&self.inner_hat).map(|(x, y)| x * y).collect();
        let mut b: Vec<Complex64> = w.iter().zip(&self.outer_hat).map(|(x, y)| x * y).collect();
        self.plan.fft.run(&mut a, true);
        self.plan.fft.run(&mut b, true);
        let n = self.plan.len();
        let mut x1 = vec![0.0; n];
        let mut x2 = vec![0.0; n];
        self.plan.extract(&a, &mut x1);
        self.plan.extract(&b, &mut x2);
        let scale = 1.0 / m as f64;
        x1.iter_mut().chain(x2.iter_mut()).for_each(|v| *v *= scale);
        (x1, x2)
    }

    pub fn draw(&self, replicate: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = replicate_rng(self.plan.seed, 0, replicate);
        self.draw_with(&mut rng)
    }
}
