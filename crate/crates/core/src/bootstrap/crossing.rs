use serde::{Deserialize, Serialize};

use super::Decay;
use crate::error::{Error, Result};
use crate::events::EventSpec;
use crate::kernels::CovarianceModel;
use crate::mc::Estimate;
use crate::sampler::{CirculantPlan, Grid};

/// Sites of padding around every event box.
const MARGIN: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    /// `B(R)` joined to `∂B(2R)`
    Annulus,
    /// the long way across a `5R × R` box
    Hcross,
    /// the short way across a `5R × R` box
    Vcross,
    /// left to right across an `R × R` box
    Square,
}

impl std::str::FromStr for CrossingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "annulus" => Ok(Self::Annulus),
            "hcross" => Ok(Self::Hcross),
            "vcross" => Ok(Self::Vcross),
            "square" => Ok(Self::Square),
            _ => Err(Error::Config(format!("unknown crossing kind {s:?}; valid: annulus, hcross, vcross, square"))),
        }
    }
}

/// Crossing probability of `f + ℓ` at level 0, from thresholds cached per
/// replicate so any other level can be read off exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub kind: CrossingKind,
    pub radius: f64,
    pub spacing: f64,
    pub ell: f64,
    pub grid: Vec<usize>,
    pub estimate: Estimate,
    #[serde(skip)]
    pub thresholds: Vec<f64>,
}

impl CrossingEstimate {
    /// Estimate at another level from the same replicates.
    pub fn at_level(&self, ell: f64) -> Estimate {
        level_estimate(&self.thresholds, ell)
    }
}

fn level_estimate(thresholds: &[f64], ell: f64) -> Estimate {
    let n = thresholds.len();
    let p = thresholds.iter().filter(|&&t| t <= ell).count() as f64 / n as f64;
    let se = if n > 1 { (p * (1.0 - p) / (n - 1) as f64).sqrt() } else { f64::INFINITY };
    Estimate { value: p, se, replicates: n as u64 }
}

/// `P̂[T ≤ ℓ]` along a grid of levels; nondecreasing in `ℓ` by construction.
pub fn level_curve(thresholds: &[f64], ells: &[f64]) -> Vec<f64> {
    ells.iter().map(|&l| level_estimate(thresholds, l).value).collect()
}

fn lattice_units(radius: f64, spacing: f64) -> Result<usize> {
    if !(spacing > 0.0 && radius > 0.0) {
        return Err(Error::Parameter("radius and spacing must be positive".into()));
    }
    let l = (radius / spacing).round();
    if l < 2.0 {
        return Err(Error::Parameter(format!(
            "radius {radius} spans fewer than 2 sites at spacing {spacing}; the grid is too coarse"
        )));
    }
    Ok(l as usize)
}

fn planar_plan(model: &CovarianceModel, shape: Vec<usize>, spacing: f64, seed: u64) -> Result<CirculantPlan> {
    if !model.is_stationary() {
        return Err(Error::Model(format!("crossing estimates need a stationary model, got {}", model.name())));
    }
    if let Some(d) = model.point_dim() {
        if d != 2 {
            return Err(Error::Model(format!("crossing estimates are planar; model has dimension {d}")));
        }
    }
    CirculantPlan::new(model, &Grid::new(shape, spacing)?, seed)
}

fn thresholds(plan: &CirculantPlan, events: &[EventSpec], n: u64) -> Result<Vec<Vec<f64>>> {
    let compiled: Vec<_> = events.iter().map(|e| e.compile()).collect::<Result<_>>()?;
    crate::mc::threshold_rows(plan, &compiled, n)
}

/// Monte Carlo estimate of a crossing probability for the planar field
/// `f + ℓ` sampled on a grid of the given spacing.
pub fn estimate_crossing(
    model: &CovarianceModel,
    spacing: f64,
    ell: f64,
    radius: f64,
    kind: CrossingKind,
    n: u64,
    seed: u64,
) -> Result<CrossingEstimate> {
    if n < 2 {
        return Err(Error::Parameter("need at least 2 replicates".into()));
    }
    let l = lattice_units(radius, spacing)?;
    let m = MARGIN;
    let (shape, event) = match kind {
        CrossingKind::Annulus => {
            let side = 4 * l + 1 + 2 * m;
            let c = 2 * l + m;
            (vec![side, side], EventSpec::annulus(&[side, side], &[c, c], l as f64, 0.0))
        }
        CrossingKind::Square | CrossingKind::Hcross | CrossingKind::Vcross => {
            let (w, axis) = match kind {
                CrossingKind::Square => (l, 0),
                CrossingKind::Hcross => (5 * l, 0),
                _ => (5 * l, 1),
            };
            let shape = vec![w + 1 + 2 * m, l + 1 + 2 * m];
            let ev = EventSpec::BoxCrossing { grid: shape.clone(), origin: vec![m, m], extent: vec![w + 1, l + 1], axis, level: 0.0 };
            (shape, ev)
        }
    };
    let plan = planar_plan(model, shape.clone(), spacing, seed)?;
    let t: Vec<f64> = thresholds(&plan, &[event], n)?.into_iter().map(|r| r[0]).collect();
    Ok(CrossingEstimate { kind, radius, spacing, ell, grid: shape, estimate: level_estimate(&t, ell), thresholds: t })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    pub estimate: f64,
    pub se: f64,
    /// envelope scaled to agree with the estimate at the smallest radius
    pub envelope: f64,
    pub dominated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub ell: f64,
    pub envelope: Decay,
    pub rows: Vec<DecayRow>,
    /// estimates never increase with the radius
    pub nonincreasing: bool,
    /// one-arm thresholds, `thresholds[r][k]` for replicate `r` and radius `k`
    #[serde(skip)]
    pub thresholds: Vec<Vec<f64>>,
}

/// One-arm probabilities `P̂_ℓ[0 ↔ ∂B(R)]` for each radius, all read from the
/// same draws so that the table is monotone replicate by replicate.
///
/// Without an explicit envelope, an exponential `e^{-λR}` is fitted through
/// the two smallest radii and the remaining rows are checked against it.
#[allow(clippy::too_many_arguments)]
pub fn subcritical_decay_table(
    model: &CovarianceModel,
    spacing: f64,
    ell: f64,
    radii: &[f64],
    n: u64,
    seed: u64,
    envelope: Option<Decay>,
) -> Result<DecayTable> {
    if radii.is_empty() || n < 2 {
        return Err(Error::Parameter("need radii and at least 2 replicates".into()));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let units: Vec<usize> = radii.iter().map(|&r| lattice_units(r, spacing)).collect::<Result<_>>()?;
    let lmax = *units.last().unwrap();
    let side = 2 * lmax + 1 + 2 * MARGIN;
    let c = lmax + MARGIN;
    let events: Vec<EventSpec> = units.iter().map(|&l| EventSpec::one_arm(&[side, side], &[c, c], l as f64, 0.0)).collect();
    let plan = planar_plan(model, vec![side, side], spacing, seed)?;
    let rows_t = thresholds(&plan, &events, n)?;
    let est: Vec<Estimate> =
        (0..radii.len()).map(|k| level_estimate(&rows_t.iter().map(|r| r[k]).collect::<Vec<_>>(), ell)).collect();
    let envelope = match envelope {
        Some(d) => d,
        None => {
            if est.len() < 2 || !(est[0].value > 0.0 && est[1].value > 0.0) || radii[1] == radii[0] {
                return Err(Error::Parameter(
                    "fitting an envelope needs two distinct radii with positive estimates".into(),
                ));
            }
            let rate = (est[0].value / est[1].value).ln() / (radii[1] - radii[0]);
            if !(rate > 0.0) {
                return Err(Error::Numerical("estimates do not decay between the two smallest radii".into()));
            }
            Decay::StretchedExp { c: rate, beta: 1.0 }
        }
    };
    let scale = est[0].value / envelope.at(radii[0]);
    let rows: Vec<DecayRow> = radii
        .iter()
        .zip(&est)
        .map(|(&r, e)| {
            let env = if scale.is_finite() { scale * envelope.at(r) } else { 0.0 };
            DecayRow { radius: r, estimate: e.value, se: e.se, envelope: env, dominated: e.value <= env + 3.0 * e.se }
        })
        .collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].estimate <= w[0].estimate);
    Ok(DecayTable { ell, envelope, rows, nonincreasing, thresholds: rows_t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_levels() {
        let m = CovarianceModel::BargmannFock;
        let e = estimate_crossing(&m, 0.5, 10.0, 4.0, CrossingKind::Square, 200, 1).unwrap();
        assert_eq!(e.estimate.value, 1.0);
        assert_eq!(e.at_level(-10.0).value, 0.0);
        let ells: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        let curve = level_curve(&e.thresholds, &ells);
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn grid_too_coarse() {
        let m = CovarianceModel::BargmannFock;
        assert!(estimate_crossing(&m, 1.0, 0.0, 1.0, CrossingKind::Annulus, 10, 1).is_err());
        assert!(estimate_crossing(&CovarianceModel::Gff { dim: 3 }, 1.0, 0.0, 4.0, CrossingKind::Square, 10, 1).is_err());
    }

    #[test]
    fn hcross_is_harder_than_vcross() {
        let m = CovarianceModel::BargmannFock;
        let h = estimate_crossing(&m, 0.5, 0.0, 3.0, CrossingKind::Hcross, 400, 3).unwrap();
        let v = estimate_crossing(&m, 0.5, 0.0, 3.0, CrossingKind::Vcross, 400, 3).unwrap();
        assert!(h.estimate.value < v.estimate.value);
    }

    #[test]
    fn decay_table_is_monotone() {
        let t = subcritical_decay_table(
            &CovarianceModel::BargmannFock,
            0.5,
            -0.5,
            &[2.0, 4.0, 8.0],
            300,
            5,
            Some(Decay::StretchedExp { c: 0.5, beta: 1.0 }),
        )
        .unwrap();
        assert!(t.nonincreasing);
        for row in &t.thresholds {
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(t.rows[0].dominated);
    }
}
