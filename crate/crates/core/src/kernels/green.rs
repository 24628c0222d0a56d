//! Green's function of simple random walk on `Z^d`, `d ≥ 3`.
//!
//! `G(x) = Σ_n P_0[S_n = x]`. Writing `1/(1-φ) = ∫_0^∞ e^{-t(1-φ)} dt` inside
//! the Fourier integral factorises it over coordinates:
//! `G(x) = d ∫_0^∞ Π_k e^{-s} I_{x_k}(s) ds`.
//! Each scaled Bessel factor is a periodic trapezoid sum (spectrally exact),
//! the `s`-integral uses Gauss–Legendre panels up to `S`, and the tail beyond
//! `S` is integrated term by term from the large-argument expansion.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

const PANEL_NODES: usize = 24;
const TAIL_ORDER: usize = 4;

struct Table {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    s_top: f64,
    /// `values[n][j] = e^{-s_j} I_n(s_j)`
    values: Vec<Vec<f64>>,
}

fn tier_for(n_max: usize) -> (u32, usize) {
    let mut k = 0;
    let mut cap = 8usize;
    while cap < n_max {
        cap *= 2;
        k += 1;
    }
    (k, cap)
}

fn scaled_bessel_all(s: f64, n_max: usize) -> Vec<f64> {
    let m = (n_max as f64 + 7.0 * s.sqrt() + 16.0).ceil() as usize;
    let h = std::f64::consts::PI / m as f64;
    let mut out = vec![0.0; n_max + 1];
    for i in 0..=m {
        let theta = i as f64 * h;
        let c = theta.cos();
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        let g = w * (s * (c - 1.0)).exp();
        if g == 0.0 {
            continue;
        }
        // cos(nθ) by the Chebyshev recurrence
        let (mut prev, mut cur) = (c, 1.0);
        for slot in out.iter_mut() {
            *slot += g * cur;
            let next = 2.0 * c * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    out.iter_mut().for_each(|v| *v /= m as f64);
    out
}

impl Table {
    fn build(cap: usize) -> Table {
        let s_top = 64.0 * (cap * cap) as f64;
        let (gx, gw) = gauss_legendre(PANEL_NODES);
        let mut edges = vec![0.0, 0.5];
        while *edges.last().unwrap() < s_top {
            let next = (edges.last().unwrap() * 2.0).min(s_top);
            edges.push(next);
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for win in edges.windows(2) {
            let (a, b) = (win[0], win[1]);
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(0.5 * (a + b) + 0.5 * (b - a) * x);
                weights.push(0.5 * (b - a) * w);
            }
        }
        let per_node: Vec<Vec<f64>> = nodes.iter().map(|&s| scaled_bessel_all(s, cap)).collect();
        let values = (0..=cap).map(|n| per_node.iter().map(|v| v[n]).collect()).collect();
        Table { nodes, weights, s_top, values }
    }

    fn green(&self, offset: &[usize]) -> f64 {
        let d = offset.len();
        let mut body = 0.0;
        for j in 0..self.nodes.len() {
            let mut prod = self.weights[j];
            for &n in offset {
                prod *= self.values[n][j];
            }
            body += prod;
        }
        // asymptotic series of e^{-s} I_n(s) in powers of 1/s, multiplied out
        let mut poly = vec![0.0; TAIL_ORDER + 1];
        poly[0] = 1.0;
        for &n in offset {
            let mut coef = [0.0; TAIL_ORDER + 1];
            coef[0] = 1.0;
            let nu2 = 4.0 * (n * n) as f64;
            for k in 1..=TAIL_ORDER {
                let odd = (2 * k - 1) as f64;
                coef[k] = -coef[k - 1] * (nu2 - odd * odd) / (8.0 * k as f64);
            }
            let mut next = vec![0.0; TAIL_ORDER + 1];
            for (i, a) in poly.iter().enumerate() {
                for (j, b) in coef.iter().enumerate() {
                    if i + j <= TAIL_ORDER {
                        next[i + j] += a * b;
                    }
                }
            }
            poly = next;
        }
        let half_d = d as f64 / 2.0;
        let pref = (2.0 * std::f64::consts::PI).powf(-half_d);
        let tail: f64 = poly
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let p = half_d + k as f64 - 1.0;
                c * pref * self.s_top.powf(-p) / p
            })
            .sum();
        d as f64 * (body + tail)
    }
}

type TableCache = RwLock<HashMap<u32, Arc<Table>>>;
type ValueCache = RwLock<HashMap<Vec<usize>, f64>>;

fn tables() -> &'static TableCache {
    static T: OnceLock<TableCache> = OnceLock::new();
    T.get_or_init(|| RwLock::new(HashMap::new()))
}

fn values() -> &'static ValueCache {
    static V: OnceLock<ValueCache> = OnceLock::new();
    V.get_or_init(|| RwLock::new(HashMap::new()))
}

fn table(tier: u32, cap: usize) -> Arc<Table> {
    if let Some(t) = tables().read().unwrap().get(&tier) {
        return t.clone();
    }
    let mut w = tables().write().unwrap();
    w.entry(tier).or_insert_with(|| Arc::new(Table::build(cap))).clone()
}

/// `G_d(x)` for a lattice offset `x ∈ Z^d`, `d ≥ 3`. Values are cached by
/// the sorted absolute offset; concurrent readers never block each other.
pub fn lattice_green(offset: &[i64]) -> Result<f64> {
    if offset.len() < 3 {
        return Err(Error::Model(format!(
            "the lattice Green's function is finite only for d ≥ 3, got d = {}",
            offset.len()
        )));
    }
    let mut key: Vec<usize> = offset.iter().map(|x| x.unsigned_abs() as usize).collect();
    key.sort_unstable();
    if let Some(&v) = values().read().unwrap().get(&key) {
        return Ok(v);
    }
    let (tier, cap) = tier_for(*key.last().unwrap());
    let v = table(tier, cap).green(&key);
    values().write().unwrap().insert(key, v);
    Ok(v)
}
