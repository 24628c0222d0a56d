//! Increasing events on lattice boxes and their thresholds.
//!
//! Thresholds are oriented so that `{X + u ∈ A} = {T(X) ≤ u}`: an event at
//! level `ℓ` with minimal value `m` on the relevant set gets `T = ℓ - m`.
//! Crossings use nearest-neighbour adjacency and a union-find sweep over
//! sites in decreasing order (ties broken by site index).

mod union_find;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use union_find::UnionFind;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventSpec {
    /// Every listed coordinate is at least `level`.
    AllAbove { sites: Vec<usize>, level: f64 },
    /// Some listed coordinate is at least `level`.
    AnyAbove { sites: Vec<usize>, level: f64 },
    /// A path of sites at least `level` inside the box joins its two faces
    /// orthogonal to `axis`. `grid` is the shape of the sampled grid.
    BoxCrossing { grid: Vec<usize>, origin: Vec<usize>, extent: Vec<usize>, axis: usize, level: f64 },
    /// A path of sites at least `level` inside the ball of radius `outer`
    /// joins the ball of radius `inner` to the outer shell
    /// `outer - 1 < |y - center| ≤ outer` (lattice units).
    AnnulusCrossing { grid: Vec<usize>, center: Vec<usize>, inner: f64, outer: f64, level: f64 },
}

impl EventSpec {
    pub fn level(&self) -> f64 {
        match self {
            Self::AllAbove { level, .. }
            | Self::AnyAbove { level, .. }
            | Self::BoxCrossing { level, .. }
            | Self::AnnulusCrossing { level, .. } => *level,
        }
    }

    /// The same event at another level.
    pub fn at_level(&self, new_level: f64) -> Self {
        let mut e = self.clone();
        match &mut e {
            Self::AllAbove { level, .. }
            | Self::AnyAbove { level, .. }
            | Self::BoxCrossing { level, .. }
            | Self::AnnulusCrossing { level, .. } => *level = new_level,
        }
        e
    }

    /// Annulus crossing from `B(center, r)` to the sphere of radius `2r`.
    pub fn annulus(grid: &[usize], center: &[usize], r: f64, level: f64) -> Self {
        Self::AnnulusCrossing { grid: grid.to_vec(), center: center.to_vec(), inner: r, outer: 2.0 * r, level }
    }

    /// One-arm event: `center` connected to the sphere of radius `r`.
    pub fn one_arm(grid: &[usize], center: &[usize], r: f64, level: f64) -> Self {
        Self::AnnulusCrossing { grid: grid.to_vec(), center: center.to_vec(), inner: 0.0, outer: r, level }
    }

    pub fn compile(&self) -> Result<CompiledEvent> {
        CompiledEvent::new(self)
    }

    pub fn support(&self) -> Result<Vec<usize>> {
        Ok(self.compile()?.support)
    }
}

#[derive(Clone, Debug)]
enum Shape {
    All,
    Any,
    Crossing { adj: Vec<Vec<u32>>, source: Vec<bool>, target: Vec<bool> },
}

/// An event prepared for repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledEvent {
    shape: Shape,
    level: f64,
    /// global sample indices, in increasing order
    support: Vec<usize>,
}

fn row_major(coords: &[usize], shape: &[usize]) -> usize {
    coords.iter().zip(shape).fold(0, |acc, (c, s)| acc * s + c)
}

fn lattice_adjacency(local_coords: &[Vec<usize>]) -> Vec<Vec<u32>> {
    let lookup: std::collections::HashMap<&[usize], u32> =
        local_coords.iter().enumerate().map(|(i, c)| (c.as_slice(), i as u32)).collect();
    local_coords
        .iter()
        .map(|c| {
            let mut nb = Vec::new();
            let mut probe = c.clone();
            for a in 0..c.len() {
                for delta in [-1i64, 1] {
                    let v = c[a] as i64 + delta;
                    if v < 0 {
                        continue;
                    }
                    probe[a] = v as usize;
                    if let Some(&j) = lookup.get(probe.as_slice()) {
                        nb.push(j);
                    }
                }
                probe[a] = c[a];
            }
            nb
        })
        .collect()
}

impl CompiledEvent {
    fn new(spec: &EventSpec) -> Result<Self> {
        let level = spec.level();
        if !level.is_finite() {
            return Err(Error::Event(format!("event level must be finite, got {level}")));
        }
        match spec {
            EventSpec::AllAbove { sites, .. } | EventSpec::AnyAbove { sites, .. } => {
                if sites.is_empty() {
                    return Err(Error::Event("event on an empty index set is degenerate".into()));
                }
                let mut support = sites.clone();
                support.sort_unstable();
                support.dedup();
                let shape = if matches!(spec, EventSpec::AllAbove { .. }) { Shape::All } else { Shape::Any };
                Ok(Self { shape, level, support })
            }
            EventSpec::BoxCrossing { grid, origin, extent, axis, .. } => {
                let d = grid.len();
                if d == 0 || origin.len() != d || extent.len() != d || *axis >= d {
                    return Err(Error::Event("box crossing dimensions are inconsistent".into()));
                }
                for a in 0..d {
                    if extent[a] == 0 || origin[a] + extent[a] > grid[a] {
                        return Err(Error::Event(format!("box leaves the grid along axis {a}")));
                    }
                }
                let mut coords = Vec::new();
                let total: usize = extent.iter().product();
                for mut i in 0..total {
                    let mut c = vec![0; d];
                    for a in (0..d).rev() {
                        c[a] = origin[a] + i % extent[a];
                        i /= extent[a];
                    }
                    coords.push(c);
                }
                let first = origin[*axis];
                let last = origin[*axis] + extent[*axis] - 1;
                let source = coords.iter().map(|c| c[*axis] == first).collect();
                let target = coords.iter().map(|c| c[*axis] == last).collect();
                Self::crossing(grid, coords, source, target, level)
            }
            EventSpec::AnnulusCrossing { grid, center, inner, outer, .. } => {
                let d = grid.len();
                if d == 0 || center.len() != d {
                    return Err(Error::Event("annulus dimensions are inconsistent".into()));
                }
                if !(*inner >= 0.0 && *outer >= 1.0 && outer > inner) {
                    return Err(Error::Event(format!("annulus radii inner={inner} outer={outer} are invalid")));
                }
                let reach = outer.floor() as usize;
                for a in 0..d {
                    if center[a] < reach || center[a] + reach >= grid[a] {
                        return Err(Error::Event(format!("annulus of radius {outer} leaves the grid")));
                    }
                }
                let side = 2 * reach + 1;
                let mut coords = Vec::new();
                let mut source = Vec::new();
                let mut target = Vec::new();
                for mut i in 0..side.pow(d as u32) {
                    let mut c = vec![0; d];
                    let mut r2 = 0.0;
                    for a in (0..d).rev() {
                        let off = (i % side) as f64 - reach as f64;
                        i /= side;
                        r2 += off * off;
                        c[a] = (center[a] as f64 + off) as usize;
                    }
                    let r = r2.sqrt();
                    if r <= *outer {
                        coords.push(c);
                        source.push(r <= *inner);
                        target.push(r > outer - 1.0);
                    }
                }
                Self::crossing(grid, coords, source, target, level)
            }
        }
    }

    fn crossing(grid: &[usize], coords: Vec<Vec<usize>>, source: Vec<bool>, target: Vec<bool>, level: f64) -> Result<Self> {
        if !source.iter().any(|&s| s) || !target.iter().any(|&t| t) {
            return Err(Error::Event("crossing has an empty source or target set".into()));
        }
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by_key(|&i| row_major(&coords[i], grid));
        let coords: Vec<Vec<usize>> = order.iter().map(|&i| coords[i].clone()).collect();
        let source: Vec<bool> = order.iter().map(|&i| source[i]).collect();
        let target: Vec<bool> = order.iter().map(|&i| target[i]).collect();
        let adj = lattice_adjacency(&coords);
        // the target must be reachable from the source inside the support
        let mut seen = source.clone();
        let mut stack: Vec<usize> = (0..coords.len()).filter(|&i| source[i]).collect();
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j as usize] {
                    seen[j as usize] = true;
                    stack.push(j as usize);
                }
            }
        }
        if !seen.iter().zip(&target).any(|(&s, &t)| s && t) {
            return Err(Error::Event("crossing target is unreachable from its source".into()));
        }
        let support = coords.iter().map(|c| row_major(c, grid)).collect();
        Ok(Self { shape: Shape::Crossing { adj, source, target }, level, support })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    fn check(&self, sample: &[f64]) -> Result<()> {
        match self.support.last() {
            Some(&m) if m >= sample.len() => Err(Error::Event(format!(
                "sample of length {} does not cover support index {m}",
                sample.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Whether the event holds for `sample`.
    pub fn occurs(&self, sample: &[f64]) -> Result<bool> {
        self.check(sample)?;
        let up = |i: usize| sample[self.support[i]] >= self.level;
        Ok(match &self.shape {
            Shape::All => (0..self.support.len()).all(up),
            Shape::Any => (0..self.support.len()).any(up),
            Shape::Crossing { adj, source, target } => {
                let mut seen = vec![false; adj.len()];
                let mut stack = Vec::new();
                for i in 0..adj.len() {
                    if source[i] && up(i) {
                        seen[i] = true;
                        stack.push(i);
                    }
                }
                let mut hit = false;
                while let Some(i) = stack.pop() {
                    if target[i] {
                        hit = true;
                        break;
                    }
                    for &j in &adj[i] {
                        let j = j as usize;
                        if !seen[j] && up(j) {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                hit
            }
        })
    }

    /// Threshold `T` with `{sample + u ∈ A} = {T ≤ u}`.
    pub fn threshold(&self, sample: &[f64]) -> Result<f64> {
        self.check(sample)?;
        let vals = self.support.iter().map(|&i| sample[i]);
        let critical = match &self.shape {
            Shape::All => vals.fold(f64::INFINITY, f64::min),
            Shape::Any => vals.fold(f64::NEG_INFINITY, f64::max),
            Shape::Crossing { adj, source, target } => {
                let local: Vec<f64> = vals.collect();
                maximin(&local, adj, source, target)
            }
        };
        Ok(self.level - critical)
    }
}

/// Largest `m` such that `{x ≥ m}` joins source to target.
fn maximin(values: &[f64], adj: &[Vec<u32>], source: &[bool], target: &[bool]) -> f64 {
    let n = values.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| values[b as usize].total_cmp(&values[a as usize]).then(a.cmp(&b)));
    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    let mut has_source = source.to_vec();
    let mut has_target = target.to_vec();
    for &s in &order {
        let s = s as usize;
        active[s] = true;
        for &j in &adj[s] {
            let j = j as usize;
            if active[j] {
                let (ra, rb) = (uf.find(s), uf.find(j));
                if ra != rb {
                    let root = uf.union(ra, rb);
                    has_source[root] = has_source[ra] || has_source[rb];
                    has_target[root] = has_target[ra] || has_target[rb];
                }
            }
        }
        let r = uf.find(s);
        if has_source[r] && has_target[r] {
            return values[s];
        }
    }
    f64::NEG_INFINITY
}

/// `spec` occurs on `sample`.
pub fn occurs(spec: &EventSpec, sample: &[f64]) -> Result<bool> {
    spec.compile()?.occurs(sample)
}

/// Threshold of `spec` on `sample`.
pub fn threshold(spec: &EventSpec, sample: &[f64]) -> Result<f64> {
    spec.compile()?.threshold(sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hbox(n: usize, m: usize) -> EventSpec {
        EventSpec::BoxCrossing { grid: vec![n, m], origin: vec![0, 0], extent: vec![n, m], axis: 1, level: 0.0 }
    }

    #[test]
    fn coordinate_events() {
        let e = EventSpec::AllAbove { sites: vec![0, 2], level: 0.0 };
        assert!(occurs(&e, &[0.5, -3.0, 0.1]).unwrap());
        assert_eq!(threshold(&e, &[0.5, -3.0, 0.1]).unwrap(), -0.1);
        let a = EventSpec::AnyAbove { sites: vec![1], level: 0.0 };
        assert_eq!(threshold(&a, &[0.5, -3.0]).unwrap(), 3.0);
        assert!(threshold(&e, &[1.0]).is_err());
        assert!(EventSpec::AllAbove { sites: vec![], level: 0.0 }.compile().is_err());
    }

    #[test]
    fn checkerboard_does_not_cross() {
        // rows y = 0, 1; crossing from column 0 to column 1
        let sample = [1.0, -1.0, -1.0, 1.0];
        assert!(!occurs(&hbox(2, 2), &sample).unwrap());
        assert_eq!(threshold(&hbox(2, 2), &sample).unwrap(), 1.0);
    }

    #[test]
    fn annulus_all_above_occurs() {
        let e = EventSpec::annulus(&[9, 9], &[4, 4], 2.0, 0.0);
        assert!(occurs(&e, &[1.0; 81]).unwrap());
        let mut v = vec![1.0; 81];
        v[4 * 9 + 4] = -5.0;
        assert!(occurs(&e, &v).unwrap());
        assert!(EventSpec::annulus(&[9, 9], &[2, 4], 2.0, 0.0).compile().is_err());
    }

    #[test]
    fn one_arm_at_center() {
        let e = EventSpec::one_arm(&[7, 7], &[3, 3], 3.0, 0.0);
        let mut v = vec![-1.0; 49];
        for x in 3..7 {
            v[3 * 7 + x] = 2.0;
        }
        assert!(occurs(&e, &v).unwrap());
        assert_eq!(threshold(&e, &v).unwrap(), -2.0);
        v[3 * 7 + 5] = 0.5;
        assert_eq!(threshold(&e, &v).unwrap(), -0.5);
    }
}
