//! Multi-scale bootstrap for crossing probabilities: level schedules, the
//! quadratic recursion with its closure conditions, annulus coverings and
//! the Monte Carlo crossing estimates it consumes.
//!
//! Radii are handled through `ln r` because the scales at which the closure
//! conditions start to hold routinely exceed the `f64` range.

mod covering;
mod crossing;
mod decay;

pub use covering::{annulus_covering, initial_bound, Covering, InitialBound};
pub use crossing::{
    estimate_crossing, level_curve, subcritical_decay_table, CrossingEstimate, CrossingKind, DecayRow, DecayTable,
};
pub use decay::{Decay, Profile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;
fn ln5() -> f64 {
    5f64.ln()
}
fn ln25() -> f64 {
    25f64.ln()
}

/// `ln r` grid used for the asymptotic checks: `r = 2^{j/8}`, `2 ≤ r ≤ 2^60`.
fn check_grid() -> Vec<f64> {
    (8..=480).map(|j| j as f64 * LN_2 / 8.0).collect()
}

fn ln_h_prime(profile: &Profile, h_prime: Option<Decay>, ln_r: f64) -> f64 {
    match h_prime {
        Some(d) => d.ln_at(ln_r),
        None => profile.ln_h(ln_r),
    }
}

/// `ln(h(r) / h'(25 r))`, taken as `-∞` when `h` vanishes.
fn ln_ratio(profile: &Profile, h_prime: Option<Decay>, ln_r: f64) -> f64 {
    let a = profile.ln_h(ln_r);
    if a == f64::NEG_INFINITY {
        return a;
    }
    a - ln_h_prime(profile, h_prime, ln_r + ln25())
}

/// `ln(h'(r)² / h'(5r))`.
fn ln_square_ratio(profile: &Profile, h_prime: Option<Decay>, ln_r: f64) -> f64 {
    2.0 * ln_h_prime(profile, h_prime, ln_r) - ln_h_prime(profile, h_prime, ln_r + ln5())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcriticalReport {
    pub h_vanishes: bool,
    pub ratio_bounded: bool,
    /// `sup h(r)/h'(25r)` over the check grid
    pub c_prime: f64,
    pub square_ratio_vanishes: bool,
    pub holds: bool,
    pub diagnostics: Vec<String>,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0]) || v.iter().all(|x| *x == f64::NEG_INFINITY)
}

/// Check, on `r = 2^{j/8}` up to `2^60`, that `h → 0`, that `h(r)/h'(25r)`
/// stays bounded (its supremum is returned as `c'`) and that
/// `h'(r)²/h'(5r) → 0`. Without `h_prime`, `h' = h`.
pub fn check_subcritical_conditions(profile: &Profile, h_prime: Option<Decay>) -> Result<SubcriticalReport> {
    profile.validate()?;
    let grid = check_grid();
    let tail = &grid[grid.len() / 2..];
    if let Some(d) = h_prime {
        d.validate()?;
        let vals: Vec<f64> = grid.iter().map(|&x| d.ln_at(x)).collect();
        if d == Decay::Zero || !strictly_decreasing(&vals) {
            return Err(Error::Parameter(format!("candidate h' = {d} is not a positive decreasing function")));
        }
    } else if profile.base == Decay::Zero {
        return Err(Error::Parameter("h vanishes identically; supply a positive h'".into()));
    }
    let mut diagnostics = Vec::new();

    let lh: Vec<f64> = tail.iter().map(|&x| profile.ln_h(x)).collect();
    let numeric = strictly_decreasing(&lh) && (lh[lh.len() - 1] < lh[0] || lh[0] == f64::NEG_INFINITY);
    let h_vanishes = numeric && profile.h_vanishes().unwrap_or(true);
    if !h_vanishes {
        diagnostics.push(format!(
            "h(r) = g(r)(log r)^(2+delta) does not tend to 0 (g = {}, delta = {})",
            profile.base, profile.delta
        ));
    }

    let lr: Vec<f64> = grid.iter().map(|&x| ln_ratio(profile, h_prime, x)).collect();
    let c_prime = lr.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    let ratio_bounded = if lr.iter().all(|x| *x == f64::NEG_INFINITY) {
        true
    } else {
        let k = lr.len() - 1;
        let last = lr[k] - lr[k - 1];
        let earlier = lr[3 * k / 4] - lr[3 * k / 4 - 1];
        last <= 1e-3 && last <= earlier.max(0.0) + 1e-12 && c_prime.is_finite()
    };
    if !ratio_bounded {
        diagnostics.push("h(r)/h'(25r) grows without bound".into());
    }

    let sq: Vec<f64> = tail.iter().map(|&x| ln_square_ratio(profile, h_prime, x)).collect();
    let square_ratio_vanishes = strictly_decreasing(&sq) && sq[sq.len() - 1] < sq[0];
    if !square_ratio_vanishes {
        diagnostics.push("h'(r)^2/h'(5r) does not tend to 0".into());
    }

    Ok(SubcriticalReport {
        h_vanishes,
        ratio_bounded,
        c_prime,
        square_ratio_vanishes,
        holds: h_vanishes && ratio_bounded && square_ratio_vanishes,
        diagnostics,
    })
}

/// Decreasing level schedule `ℓ₁ = ℓ'`, `ℓ_{n+1} = ℓ_n - (log(R₀ 5ⁿ))^{-1-δ/2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub ln_r0: f64,
    pub delta: f64,
    /// `ℓ₁, …, ℓ_{n_max}`
    pub levels: Vec<f64>,
    /// upper bound on `Σ_{n ≥ n_max} (log(R₀ 5ⁿ))^{-1-δ/2}`
    pub tail_bound: f64,
    /// `ℓ_{n_max} - tail_bound ≤ lim ℓ_n`
    pub limit_lower_bound: f64,
}

pub fn sprinkle_schedule(r0: f64, delta: f64, ell_prime: f64, n_max: usize) -> Result<Schedule> {
    if !(r0 > 1.0) {
        return Err(Error::Parameter(format!("R0 must exceed 1, got {r0}")));
    }
    sprinkle_schedule_ln(r0.ln(), delta, ell_prime, n_max)
}

pub fn sprinkle_schedule_ln(ln_r0: f64, delta: f64, ell_prime: f64, n_max: usize) -> Result<Schedule> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!(
            "delta = {delta}: the sprinkling steps are not summable and the limiting level is -infinity"
        )));
    }
    if !(ln_r0 > 0.0) || n_max == 0 {
        return Err(Error::Parameter("need R0 > 1 and at least one level".into()));
    }
    let s = 1.0 + delta / 2.0;
    let b = ln5();
    let step = |n: f64| (ln_r0 + b * n).powf(-s);
    let mut levels = Vec::with_capacity(n_max);
    levels.push(ell_prime);
    for n in 1..n_max {
        let prev = levels[n - 1];
        levels.push(prev - step(n as f64));
    }
    // Euler–Maclaurin with two correction terms overestimates the tail of a
    // completely monotone summand.
    let x = ln_r0 + b * n_max as f64;
    let tail_bound = x.powf(1.0 - s) / (b * (s - 1.0)) + 0.5 * x.powf(-s) + s * b * x.powf(-s - 1.0) / 12.0;
    let limit_lower_bound = levels[n_max - 1] - tail_bound;
    Ok(Schedule { ln_r0, delta, levels, tail_bound, limit_lower_bound })
}

/// Inputs of the quadratic recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionInput {
    pub profile: Profile,
    pub h_prime: Option<Decay>,
    pub n_d: usize,
    /// decoupling constant
    pub c: f64,
    pub ln_r0: f64,
    pub p1: f64,
    /// `sup_{r ≥ R₀} h(r)/h'(25r)`; computed when absent
    pub c_prime: Option<f64>,
    pub n_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    pub ln_r0: f64,
    pub p1: f64,
    pub n_d: usize,
    pub c: f64,
    pub c_prime: f64,
    /// `q₁, …, q_{n_steps}`
    pub q: Vec<f64>,
    /// `2 n_d² c c' h'(5 R₀ 5ⁿ)`
    pub targets: Vec<f64>,
    pub first_failure: Option<usize>,
    /// `h'(r)²/h'(5r) ≤ (4 n_d⁴ c c')^{-1}` for `r ≥ R₀`
    pub scale_condition: bool,
    /// `p₁ ≤ 2 n_d² c c' h'(25 R₀)`
    pub base_condition: bool,
    pub max_p1: f64,
    pub min_ln_r0: Option<f64>,
    pub certified: bool,
    pub diagnostics: Vec<String>,
}

/// `ln r` grid at and above `R₀`: every quarter scale across the run, then
/// doubling `ln r` far out.
fn grid_from(ln_r0: f64, n_steps: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=4 * (n_steps + 3)).map(|j| ln_r0 + j as f64 * ln5() / 4.0).collect();
    let mut x = ln_r0.max(1.0);
    for _ in 0..60 {
        x *= 2.0;
        g.push(x.max(ln_r0));
    }
    g
}

fn sup_ratio(profile: &Profile, h_prime: Option<Decay>, grid: &[f64]) -> f64 {
    grid.iter().map(|&x| ln_ratio(profile, h_prime, x)).fold(f64::NEG_INFINITY, f64::max).exp()
}

fn scale_target(n_d: usize, c: f64, c_prime: f64) -> f64 {
    -(4.0 * (n_d as f64).powi(4) * c * c_prime).ln()
}

/// The explicit closure point found by [`find_closure`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Closure {
    pub ln_r0: f64,
    pub c_prime: f64,
    pub max_p1: f64,
}

/// Smallest `R₀` on a geometric `ln r` grid beyond which the scale condition
/// holds at every grid point, with the matching `c'` and largest admissible
/// `p₁`.
pub fn find_closure(profile: &Profile, h_prime: Option<Decay>, n_d: usize, c: f64) -> Result<Closure> {
    let rep = check_subcritical_conditions(profile, h_prime)?;
    if !rep.holds {
        return Err(Error::Model(rep.diagnostics.join("; ")));
    }
    let grid: Vec<f64> = (0..70_000).map(|k| 1.0 * 1.01f64.powi(k)).take_while(|x| x.is_finite() && *x < 1e300).collect();
    let c0 = sup_ratio(profile, h_prime, &grid);
    let target = scale_target(n_d, c, c0);
    let last_bad = grid.iter().rposition(|&x| ln_square_ratio(profile, h_prime, x) > target);
    let start = match last_bad {
        None => 0,
        Some(i) if i + 1 < grid.len() => i + 1,
        Some(_) => return Err(Error::Numerical("scale condition fails throughout the search range".into())),
    };
    let ln_r0 = grid[start];
    let c_prime = sup_ratio(profile, h_prime, &grid[start..]);
    let max_p1 = max_p1(profile, h_prime, n_d, c, c_prime, ln_r0);
    Ok(Closure { ln_r0, c_prime, max_p1 })
}

fn max_p1(profile: &Profile, h_prime: Option<Decay>, n_d: usize, c: f64, c_prime: f64, ln_r0: f64) -> f64 {
    let lead = 2.0 * (n_d as f64).powi(2) * c * c_prime;
    (lead * ln_h_prime(profile, h_prime, ln_r0 + ln25()).exp()).min(1.0)
}

/// Iterate `q_{n+1} = n_d² q_n² + c n_d² h(R₀ 5ⁿ)` from `q₁ = p₁` and check
/// `q_n ≤ 2 n_d² c c' h'(5 R₀ 5ⁿ)` together with the two closure conditions.
pub fn run_recursion(input: &RecursionInput) -> Result<RecursionReport> {
    let RecursionInput { profile, h_prime, n_d, c, ln_r0, p1, c_prime, n_steps } = input.clone();
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::Parameter(format!("p1 must lie in [0, 1], got {p1}")));
    }
    if !(ln_r0 > 0.0) || n_d == 0 || !(c > 0.0) || n_steps == 0 {
        return Err(Error::Parameter("need R0 > 1, n_d ≥ 1, c > 0 and at least one step".into()));
    }
    let sub = check_subcritical_conditions(&profile, h_prime)?;
    if !sub.holds {
        return Err(Error::Model(sub.diagnostics.join("; ")));
    }
    let grid = grid_from(ln_r0, n_steps);
    let c_prime = c_prime.unwrap_or_else(|| sup_ratio(&profile, h_prime, &grid));
    let mut diagnostics = Vec::new();
    if c_prime < sup_ratio(&profile, h_prime, &grid) * (1.0 - 1e-12) {
        diagnostics.push(format!("supplied c' = {c_prime} is below sup h(r)/h'(25r) over r ≥ R0"));
    }
    let target = scale_target(n_d, c, c_prime);
    let scale_condition = grid.iter().all(|&x| ln_square_ratio(&profile, h_prime, x) <= target);
    let min_ln_r0 = if scale_condition {
        None
    } else {
        let closure = find_closure(&profile, h_prime, n_d, c).ok();
        diagnostics.push(format!(
            "scale condition h'(r)^2/h'(5r) <= 1/(4 n_d^4 c c') fails above R0 = exp({ln_r0}); it holds from ln R0 = {}",
            closure.as_ref().map_or("unknown".to_string(), |cl| cl.ln_r0.to_string())
        ));
        closure.map(|cl| cl.ln_r0)
    };
    let max_p1 = max_p1(&profile, h_prime, n_d, c, c_prime, ln_r0);
    let base_condition = p1 <= max_p1;
    if !base_condition {
        diagnostics.push(format!("base condition fails: p1 = {p1} exceeds 2 n_d^2 c c' h'(25 R0) = {max_p1}"));
    }
    let nd2 = (n_d as f64).powi(2);
    let lead = 2.0 * nd2 * c * c_prime;
    let mut q = Vec::with_capacity(n_steps);
    let mut targets = Vec::with_capacity(n_steps);
    let mut cur = p1;
    for n in 1..=n_steps {
        q.push(cur);
        targets.push(lead * ln_h_prime(&profile, h_prime, ln_r0 + (n + 1) as f64 * ln5()).exp());
        let forcing = c * nd2 * profile.ln_h(ln_r0 + n as f64 * ln5()).exp();
        cur = nd2 * cur * cur + forcing;
    }
    let first_failure = q.iter().zip(&targets).position(|(a, b)| *a > b * (1.0 + 1e-12)).map(|i| i + 1);
    if let Some(n) = first_failure {
        diagnostics.push(format!("invariant q_n <= 2 n_d^2 c c' h'(5 R0 5^n) first fails at n = {n}"));
    }
    let certified = scale_condition && base_condition && first_failure.is_none();
    Ok(RecursionReport {
        ln_r0,
        p1,
        n_d,
        c,
        c_prime,
        q,
        targets,
        first_failure,
        scale_condition,
        base_condition,
        max_p1,
        min_ln_r0,
        certified,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polylog(gamma: f64, delta: f64) -> Profile {
        Profile::from_g(Decay::Polylog { gamma }, delta)
    }

    #[test]
    fn polylog_with_h_prime_equal_h_qualifies() {
        let r = check_subcritical_conditions(&polylog(3.5, 0.25), None).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.c_prime >= 1.0 && r.c_prime.is_finite());
    }

    #[test]
    fn slow_polylog_is_rejected_for_h() {
        let r = check_subcritical_conditions(&polylog(1.5, 0.25), None).unwrap();
        assert!(!r.holds && !r.h_vanishes);
        assert!(r.diagnostics[0].contains("does not tend to 0"));
        // the boundary exponent is also rejected
        assert!(!check_subcritical_conditions(&polylog(2.25, 0.25), None).unwrap().h_vanishes);
    }

    #[test]
    fn stretched_exponential_pair() {
        let h = Profile::from_h(Decay::StretchedExp { c: 1.0, beta: 0.4 }, 0.5);
        let hp = Decay::StretchedExp { c: 1.0 / 25.0, beta: 0.4 };
        assert!(check_subcritical_conditions(&h, Some(hp)).unwrap().holds);
        // above beta = ln 2 / ln 5 the squared ratio grows
        let h = Profile::from_h(Decay::StretchedExp { c: 1.0, beta: 0.5 }, 0.5);
        let hp = Decay::StretchedExp { c: 1.0 / 25.0, beta: 0.5 };
        assert!(!check_subcritical_conditions(&h, Some(hp)).unwrap().square_ratio_vanishes);
    }

    #[test]
    fn super_exponential_candidate_is_rejected() {
        let r = check_subcritical_conditions(&polylog(3.5, 0.25), Some(Decay::Gaussian { c: 1.0 })).unwrap();
        assert!(!r.square_ratio_vanishes && !r.holds);
    }

    #[test]
    fn increasing_candidate_is_an_input_error() {
        // ln ln r grows, so this "decay" with negative exponent is refused at parse time
        assert!("polylog:-1".parse::<Decay>().is_err());
        assert!(check_subcritical_conditions(&polylog(3.5, 0.25), Some(Decay::Zero)).is_err());
    }

    #[test]
    fn schedule_steps() {
        let s = sprinkle_schedule(10.0, 2.0, 1.0, 5).unwrap();
        assert_eq!(s.levels[0], 1.0);
        assert!((s.levels[0] - s.levels[1] - 50f64.ln().powi(-2)).abs() < 1e-15);
        assert!(s.levels.windows(2).all(|w| w[1] < w[0]));
        assert!(s.limit_lower_bound < s.levels[4]);
        assert!(sprinkle_schedule(10.0, 0.0, 1.0, 5).is_err());
        assert!(sprinkle_schedule(1.0, 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn schedule_tail_bound_dominates_direct_sum() {
        let s = sprinkle_schedule(10.0, 1.0, 0.0, 50).unwrap();
        let direct: f64 = (50..2_000_000).map(|n| (10f64.ln() + n as f64 * 5f64.ln()).powf(-1.5)).sum();
        assert!(s.tail_bound >= direct);
        assert!(s.tail_bound - direct < 1e-3);
    }

    #[test]
    fn zero_forcing_and_zero_start_stay_zero() {
        let rep = run_recursion(&RecursionInput {
            profile: Profile::from_g(Decay::Zero, 0.25),
            h_prime: Some(Decay::Polylog { gamma: 1.0 }),
            n_d: 10,
            c: 36.0,
            ln_r0: 5.0,
            p1: 0.0,
            c_prime: None,
            n_steps: 20,
        })
        .unwrap();
        assert!(rep.q.iter().all(|&q| q == 0.0));
        assert_eq!(rep.c_prime, 0.0);
    }

    #[test]
    fn closure_then_base_violation() {
        let profile = polylog(3.5, 0.25);
        let cl = find_closure(&profile, None, 100, 36.0).unwrap();
        let mut input = RecursionInput {
            profile,
            h_prime: None,
            n_d: 100,
            c: 36.0,
            ln_r0: cl.ln_r0,
            p1: cl.max_p1,
            c_prime: None,
            n_steps: 20,
        };
        let rep = run_recursion(&input).unwrap();
        assert!(rep.certified, "{:?}", rep.diagnostics);
        input.p1 = (2.0 * rep.max_p1).min(1.0);
        let rep = run_recursion(&input).unwrap();
        assert!(!rep.base_condition && !rep.certified);
        assert!(rep.diagnostics.iter().any(|d| d.contains("base condition")));
    }
}
