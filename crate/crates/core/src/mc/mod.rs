//! Monte Carlo verification of the decoupling inequalities.
//!
//! Every replicate is drawn from its own counter-derived stream, per-replicate
//! statistics are collected in replicate order and all reductions run
//! sequentially afterwards, so reports do not depend on the worker count.
//! Standard errors of composite quantities use the delta method on the same
//! replicate set as the point estimates.

mod report;
mod verify;

pub use report::{BoundCheck, Estimate, InequalityReport, TheoremId, Verdict, NOISE_MULTIPLIER};
pub use verify::*;

use rayon::prelude::*;

use crate::error::Result;
use crate::events::CompiledEvent;
use crate::sampler::GaussianField;

/// Evaluate `f` on replicates `0..n` in parallel, returning results in
/// replicate order.
pub fn per_replicate<R, F>(n: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync,
{
    (0..n).into_par_iter().map(&f).collect()
}

/// Thresholds of each event on replicates `0..n`; `rows[r][k]` belongs to
/// event `k`.
pub fn threshold_rows<F: GaussianField + ?Sized>(
    plan: &F,
    events: &[CompiledEvent],
    n: u64,
) -> Result<Vec<Vec<f64>>> {
    per_replicate(n, |r| {
        let x = plan.draw(r);
        events.iter().map(|e| e.threshold(&x)).collect()
    })
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Estimate { value: mean, se, replicates: n as u64 }
}

/// Standard error of a smooth statistic of column means with gradient
/// `grad`, from the sample spread of the linearised per-replicate values.
pub fn delta_se(columns: &[&[f64]], grad: &[f64]) -> f64 {
    let n = columns[0].len();
    let lin: Vec<f64> = (0..n).map(|r| columns.iter().zip(grad).map(|(c, g)| g * c[r]).sum()).collect();
    mean_se(&lin).se
}

/// Indicator as `f64`.
pub(crate) fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
