//! One PASS/FAIL line per acceptance criterion, written straight to stdout so
//! it survives the test harness's output capture. Criteria run one at a time
//! under a shared lock so their wall-clock limits are measured on an idle
//! machine.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sprinkle::analytic::{bivariate_cdf, errorless_two_point, scan_grid, sprinkled_two_point, std_sf, tail_gap_scan};
use sprinkle::bootstrap::{
    annulus_covering, check_subcritical_conditions, estimate_crossing, find_closure, run_recursion,
    sprinkle_schedule_ln, subcritical_decay_table, CrossingKind, Decay, Profile, RecursionInput, RecursionReport,
};
use sprinkle::events::EventSpec;
use sprinkle::experiment::{evaluate, full_suite, run_suite, SuiteId};
use sprinkle::kernels::CovarianceModel;
use sprinkle::mc::{finite_range_bound, InequalityReport, Verdict};
use sprinkle::measures::{capacity, lattice_ball};
use sprinkle::sampler::{CirculantPlan, Grid};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Print the criterion line, then fail the test if it did not hold.
fn record(id: u32, what: &str, ok: bool, detail: &str) {
    let line = format!("{} criterion {id:>2} {what}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(ok, "{}", line.trim_end());
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn suite_reports(prefixes: &[&str]) -> BTreeMap<String, InequalityReport> {
    full_suite()
        .into_iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .map(|c| (c.name.clone(), evaluate(&c).unwrap()))
        .collect()
}

fn failures(reports: &BTreeMap<String, InequalityReport>) -> Vec<String> {
    reports.iter().filter(|(_, r)| r.verdict.is_fail()).map(|(n, _)| n.clone()).collect()
}

/// `|estimate - exact| ≤ 3 se + extra`, with the discrepancy listed on failure.
fn near(misses: &mut Vec<String>, label: &str, est: f64, se: f64, exact: f64, extra: f64) {
    if (est - exact).abs() > 3.0 * se + extra + 1e-12 {
        misses.push(format!("{label}: {est} vs {exact} (se {se})"));
    }
}

#[test]
fn criterion_01_tail_gap_exponent() {
    let _g = serial();
    let t = Instant::now();
    let scan = tail_gap_scan(0.293, &scan_grid(40.0, 0.25).unwrap()).unwrap();
    let elapsed = t.elapsed();
    let limit = scan.limit.unwrap_or(f64::NAN);
    let reference = scan.reference;
    let ok = (5.0..=5.83).contains(&limit)
        && limit >= 0.85 * reference
        && limit <= reference + 0.01
        && within(elapsed, 1.0);
    record(
        1,
        "tail-gap exponent",
        ok,
        &format!("limit {limit:.4}, reference {reference:.4}, {:.3}s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_02_bivariate_identities() {
    let _g = serial();
    let t = Instant::now();
    let mut worst_orthant = 0.0f64;
    for k in 0..99 {
        let rho = -0.98 + 0.02 * k as f64;
        let exact = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        worst_orthant = worst_orthant.max((bivariate_cdf(rho, 0.0, 0.0).unwrap() - exact).abs());
    }
    let grid = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|k| lo + step * k as f64).collect()
    };
    let uv = grid(-2.0, 2.0, 0.5);
    let mut sprinkled_min = f64::INFINITY;
    let mut sprinkled_count = 0;
    for &rho in &grid(0.05, 0.95, 0.05) {
        for &u in &uv {
            for &v in &uv {
                for &eps in &grid(0.0, 4.0, 0.5) {
                    sprinkled_min = sprinkled_min.min(sprinkled_two_point(rho, u, v, eps).unwrap().slack);
                    sprinkled_count += 1;
                }
            }
        }
    }
    let mut errorless_min = f64::INFINITY;
    for &rho in &grid(0.0, 0.95, 0.05) {
        for &u in &uv {
            for &v in &uv {
                errorless_min = errorless_min.min(errorless_two_point(rho, u, v).unwrap().slack);
            }
        }
    }
    let elapsed = t.elapsed();
    let ok = worst_orthant <= 1e-10 && sprinkled_min >= -1e-12 && errorless_min >= -1e-12 && within(elapsed, 10.0);
    record(
        2,
        "bivariate identities",
        ok,
        &format!(
            "orthant error {worst_orthant:.2e}; sprinkled min slack {sprinkled_min:.3e} over {sprinkled_count} points; \
             errorless min slack {errorless_min:.3e}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_03_capacity_oracles() {
    let _g = serial();
    let t = Instant::now();
    let mut two_point_err = 0.0f64;
    for k in -9..=9 {
        let r = 0.1 * k as f64;
        let kk = DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
        let cap = capacity(&kk, &[0, 1], 1e-13).unwrap().value;
        two_point_err = two_point_err.max((cap - 2.0 / (1.0 + r)).abs());
    }
    let mut identity_err = 0.0f64;
    for m in 1..=20 {
        let idx: Vec<usize> = (0..m).collect();
        let cap = capacity(&DMatrix::identity(m, m), &idx, 1e-13).unwrap().value;
        identity_err = identity_err.max((cap - m as f64).abs());
    }
    let gff = CovarianceModel::Gff { dim: 3 };
    let caps: Vec<f64> = [2.0, 4.0, 8.0]
        .iter()
        .map(|&r| {
            let pts = lattice_ball(&[0, 0, 0], r);
            let k = gff.build_cov_matrix(&pts).unwrap().matrix;
            let idx: Vec<usize> = (0..pts.len()).collect();
            capacity(&k, &idx, 1e-6).unwrap().value
        })
        .collect();
    let ratios = [caps[1] / caps[0], caps[2] / caps[1]];
    let elapsed = t.elapsed();
    let ok = two_point_err <= 1e-8
        && identity_err <= 1e-8
        && ratios.iter().all(|q| (q - 2.0).abs() <= 0.5)
        && within(elapsed, 60.0);
    record(
        3,
        "capacity oracles",
        ok,
        &format!(
            "two-point error {two_point_err:.2e}; identity error {identity_err:.2e}; free-field ball capacities \
             {:.3} {:.3} {:.3}, ratios {:.3} {:.3}; {:.1}s",
            caps[0],
            caps[1],
            caps[2],
            ratios[0],
            ratios[1],
            elapsed.as_secs_f64()
        ),
    );
}

/// A crossing instance described independently of the event compiler: the
/// sites (as grid coordinates) with their source and target flags.
struct Instance {
    sites: Vec<[usize; 2]>,
    source: Vec<bool>,
    target: Vec<bool>,
}

fn box_instance(origin: [usize; 2], extent: [usize; 2], axis: usize) -> Instance {
    let mut inst = Instance { sites: Vec::new(), source: Vec::new(), target: Vec::new() };
    for x in origin[0]..origin[0] + extent[0] {
        for y in origin[1]..origin[1] + extent[1] {
            let c = [x, y];
            inst.sites.push(c);
            inst.source.push(c[axis] == origin[axis]);
            inst.target.push(c[axis] == origin[axis] + extent[axis] - 1);
        }
    }
    inst
}

fn annulus_instance(center: [usize; 2], inner: f64, outer: f64, shape: [usize; 2]) -> Instance {
    let mut inst = Instance { sites: Vec::new(), source: Vec::new(), target: Vec::new() };
    for x in 0..shape[0] {
        for y in 0..shape[1] {
            let dx = x as f64 - center[0] as f64;
            let dy = y as f64 - center[1] as f64;
            let r = (dx * dx + dy * dy).sqrt();
            if r <= outer {
                inst.sites.push([x, y]);
                inst.source.push(r <= inner);
                inst.target.push(r > outer - 1.0);
            }
        }
    }
    inst
}

/// Largest `min` of the field along any simple nearest-neighbour path from a
/// source site to a target site, by exhaustive depth-first enumeration.
fn brute_maximin(inst: &Instance, field: &[f64], shape: [usize; 2]) -> f64 {
    let n = inst.sites.len();
    let value = |i: usize| field[inst.sites[i][0] * shape[1] + inst.sites[i][1]];
    let adjacent = |a: usize, b: usize| {
        let (p, q) = (inst.sites[a], inst.sites[b]);
        p[0].abs_diff(q[0]) + p[1].abs_diff(q[1]) == 1
    };
    #[allow(clippy::too_many_arguments)]
    fn walk(
        at: usize,
        current: f64,
        on_path: &mut Vec<bool>,
        best: &mut f64,
        n: usize,
        target: &[bool],
        value: &dyn Fn(usize) -> f64,
        adjacent: &dyn Fn(usize, usize) -> bool,
    ) {
        if target[at] {
            *best = best.max(current);
            return;
        }
        for next in 0..n {
            if !on_path[next] && adjacent(at, next) {
                let m = current.min(value(next));
                if m > *best {
                    on_path[next] = true;
                    walk(next, m, on_path, best, n, target, value, adjacent);
                    on_path[next] = false;
                }
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for s in (0..n).filter(|&i| inst.source[i]) {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        walk(s, value(s), &mut on_path, &mut best, n, &inst.target, &value, &adjacent);
    }
    best
}

fn random_crossing(rng: &mut ChaCha8Rng) -> (EventSpec, Instance, [usize; 2]) {
    let shape = [rng.random_range(1..=4usize), rng.random_range(1..=4usize)];
    let level = rng.random_range(-2..=2) as f64;
    if shape[0] >= 3 && shape[1] >= 3 && rng.random_bool(0.3) {
        let center = [rng.random_range(1..shape[0] - 1), rng.random_range(1..shape[1] - 1)];
        let inner = if rng.random_bool(0.5) { 0.0 } else { 0.5 };
        let outer = if rng.random_bool(0.5) { 1.0 } else { 1.5 };
        let spec = EventSpec::AnnulusCrossing { grid: shape.to_vec(), center: center.to_vec(), inner, outer, level };
        return (spec, annulus_instance(center, inner, outer, shape), shape);
    }
    let origin = [rng.random_range(0..shape[0]), rng.random_range(0..shape[1])];
    let extent = [rng.random_range(1..=shape[0] - origin[0]), rng.random_range(1..=shape[1] - origin[1])];
    let axis = rng.random_range(0..2);
    let spec = EventSpec::BoxCrossing { grid: shape.to_vec(), origin: origin.to_vec(), extent: extent.to_vec(), axis, level };
    (spec, box_instance(origin, extent, axis), shape)
}

/// Events on a 6×6 grid for the invariant checks.
fn invariant_event(rng: &mut ChaCha8Rng) -> EventSpec {
    let level = rng.random_range(-1.0..1.0);
    let mut sites: Vec<usize> = (0..rng.random_range(1..6)).map(|_| rng.random_range(0..36)).collect();
    sites.sort_unstable();
    sites.dedup();
    match rng.random_range(0..4) {
        0 => EventSpec::AllAbove { sites, level },
        1 => EventSpec::AnyAbove { sites, level },
        2 => EventSpec::BoxCrossing { grid: vec![6, 6], origin: vec![1, 0], extent: vec![4, 5], axis: rng.random_range(0..2), level },
        _ => EventSpec::AnnulusCrossing { grid: vec![6, 6], center: vec![3, 3], inner: 0.0, outer: 2.0, level },
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn criterion_04_threshold_correctness() {
    let _g = serial();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let instances = 20_000;
    let mut mismatches = 0;
    for _ in 0..instances {
        let (spec, inst, shape) = random_crossing(&mut rng);
        let field: Vec<f64> = (0..shape[0] * shape[1]).map(|_| rng.random_range(-3..=3) as f64).collect();
        let expected = spec.level() - brute_maximin(&inst, &field, shape);
        let got = spec.compile().unwrap().threshold(&field).unwrap();
        let support: Vec<usize> = inst.sites.iter().map(|c| c[0] * shape[1] + c[1]).collect();
        let mut compiled_support = spec.support().unwrap();
        compiled_support.sort_unstable();
        let mut oracle_support = support.clone();
        oracle_support.sort_unstable();
        if got != expected || compiled_support != oracle_support {
            mismatches += 1;
        }
    }

    const TOL: f64 = 1e-12;
    let samples = 1_000;
    let mut broken: BTreeMap<&str, usize> = BTreeMap::new();
    let mut bump = |name: &'static str, holds: bool| {
        *broken.entry(name).or_default() += usize::from(!holds);
    };
    for _ in 0..samples {
        let ev = invariant_event(&mut rng);
        let a = ev.compile().unwrap();
        let support = a.support().to_vec();
        let x = gaussian(&mut rng, 36);
        let tx = a.threshold(&x).unwrap();

        let y: Vec<f64> = x.iter().map(|v| v + 0.3 * rng.sample::<f64, _>(StandardNormal)).collect();
        let sup_dist = support.iter().map(|&i| (x[i] - y[i]).abs()).fold(0.0, f64::max);
        bump("lipschitz", (a.threshold(&y).unwrap() - tx).abs() <= sup_dist + TOL);

        let c: f64 = rng.random_range(-2.0..2.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        bump("shift equivariance", (a.threshold(&shifted).unwrap() - (tx - c)).abs() <= TOL);

        let raised: Vec<f64> = x.iter().map(|v| v + rng.random_range(0.0..1.0)).collect();
        bump("monotonicity", a.threshold(&raised).unwrap() <= tx);

        let mut outside = x.clone();
        for (i, v) in outside.iter_mut().enumerate() {
            if support.binary_search(&i).is_err() {
                *v = rng.sample(StandardNormal);
            }
        }
        bump("locality", a.threshold(&outside).unwrap() == tx);

        let new_level: f64 = rng.random_range(-2.0..2.0);
        let moved = ev.at_level(new_level).compile().unwrap().threshold(&x).unwrap();
        let u: f64 = rng.random_range(-3.0..3.0);
        let lifted: Vec<f64> = x.iter().map(|v| v + u).collect();
        let consistent = (moved - (tx + new_level - ev.level())).abs() <= TOL
            && a.occurs(&lifted).unwrap() == (tx <= u)
            && a.occurs(&x.iter().map(|v| v + tx + 1e-9).collect::<Vec<_>>()).unwrap()
            && !a.occurs(&x.iter().map(|v| v + tx - 1e-9).collect::<Vec<_>>()).unwrap();
        bump("level consistency", consistent);
    }
    let elapsed = t.elapsed();
    let violations: usize = broken.values().sum();
    let ok = mismatches == 0 && violations == 0 && within(elapsed, 30.0);
    record(
        4,
        "threshold correctness",
        ok,
        &format!(
            "{mismatches} mismatches over {instances} brute-force instances; invariant violations {broken:?} over \
             {samples} samples each; {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_sprinkled_suite() {
    let _g = serial();
    let t = Instant::now();
    let reports = suite_reports(&["thm1.1-"]);
    let elapsed = t.elapsed();
    let mut misses = Vec::new();
    let (u, eps) = (0.5, 0.5);
    for mode in ["proof-36", "positive-1"] {
        let r = &reports[&format!("thm1.1-rank-one-{mode}")];
        let j = r.terms["joint"];
        near(&mut misses, "joint", j.value, j.se, std_sf(u), 0.0);
        let up = r.terms["shifted_up_1"];
        near(&mut misses, "shifted", up.value, up.se, std_sf(u - eps), 0.0);
        let lhs = r.terms["upper_lhs"];
        near(&mut misses, "gap", lhs.value, lhs.se, std_sf(u) - std_sf(u - eps).powi(2), 0.0);
    }
    let positive_branch = reports.iter().filter(|(n, r)| n.ends_with("positive-1") && r.verdict != Verdict::NotApplicable).count();
    let failed = failures(&reports);
    let ok = reports.len() == 9 && failed.is_empty() && misses.is_empty() && positive_branch == 4 && within(elapsed, 300.0);
    record(
        5,
        "sprinkled decoupling suite",
        ok,
        &format!(
            "{} configurations, failing {failed:?}, closed-form misses {misses:?}, {positive_branch} checked against c = 1; \
             {:.1}s",
            reports.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_06_covariance_formulas() {
    let _g = serial();
    let t = Instant::now();
    let reports = suite_reports(&["prop2.2-", "hoeffding-", "positive-association-", "interpolation-"]);
    let elapsed = t.elapsed();
    let mut misses = Vec::new();
    let c = reports["prop2.2-rank-one"].terms["threshold_cov"];
    near(&mut misses, "threshold covariance", c.value, c.se, 1.0, 0.0);
    let h = &reports["hoeffding-rank-one"];
    let b = h.terms["box_integral"];
    let budgets = h.constants["quadrature_budget"] + h.constants["truncation_budget"];
    near(&mut misses, "box integral", b.value, b.se, 1.0, budgets);
    let c = reports["hoeffding-rank-one"].terms["threshold_cov"];
    near(&mut misses, "hoeffding covariance", c.value, c.se, 1.0, 0.0);
    let c = reports["hoeffding-explicit"].terms["threshold_cov"];
    near(&mut misses, "explicit covariance", c.value, c.se, 0.6, 0.0);
    let tail = std_sf(1.0);
    let g = reports["positive-association-rank-one"].terms["gap"];
    near(&mut misses, "positive gap", g.value, g.se, tail - tail * tail, 0.0);
    let g = reports["positive-association-negated"].terms["gap"];
    near(&mut misses, "negated gap", g.value, g.se, -tail * tail, 0.0);
    let d = reports["interpolation-linear"].terms["direct_cov"];
    near(&mut misses, "linear covariance", d.value, d.se, 0.3, 0.0);
    let d = reports["interpolation-same"].terms["interpolated_cov"];
    near(&mut misses, "variance", d.value, d.se, 1.0, 0.0);
    let failed = failures(&reports);
    let ok = reports.len() == 12 && failed.is_empty() && misses.is_empty() && within(elapsed, 180.0);
    record(
        6,
        "threshold covariance, Hoeffding, association and interpolation",
        ok,
        &format!(
            "{} configurations, failing {failed:?}, closed-form misses {misses:?}, rank-one box integral {:.4} ± {:.4}; \
             {:.1}s",
            reports.len(),
            b.value,
            b.se,
            elapsed.as_secs_f64()
        ),
    );
}

/// Torus offset `c` as a physical distance along one axis.
fn torus_distance(c: usize, side: usize, spacing: f64) -> f64 {
    c.min(side - c) as f64 * spacing
}

/// `Σ_{|y| > R} q(y)²` over the torus, read straight off the kernel array.
fn direct_tail_sum(kernel: &[f64], torus: &[usize], spacing: f64, radius: f64) -> f64 {
    kernel
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let (a, b) = (i / torus[1], i % torus[1]);
            torus_distance(a, torus[0], spacing).hypot(torus_distance(b, torus[1], spacing)) > radius
        })
        .map(|(_, v)| v * v)
        .sum()
}

/// Square-root kernel of `e^{-x²/2}` on a 1-d torus of `side` sites. Each
/// spectral value comes from Poisson summation, so it keeps full relative
/// precision even where it is far below machine epsilon times the peak.
fn exact_root_kernel(side: usize, spacing: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let root: Vec<f64> = (0..side)
        .map(|m| {
            let m = if 2 * m > side { m as f64 - side as f64 } else { m as f64 };
            let theta = 2.0 * PI * m / side as f64;
            let lambda: f64 = (-6..=6)
                .map(|k| (-(theta + 2.0 * PI * k as f64).powi(2) / (2.0 * spacing * spacing)).exp())
                .sum::<f64>()
                * (2.0 * PI).sqrt()
                / spacing;
            lambda.sqrt()
        })
        .collect();
    (0..side)
        .map(|y| {
            root.iter().enumerate().map(|(m, r)| r * (2.0 * PI * (m * y) as f64 / side as f64).cos()).sum::<f64>()
                / side as f64
        })
        .collect()
}

#[test]
fn criterion_07_one_sided_errorless_finite_range_isoperimetric_noise() {
    let _g = serial();
    let t = Instant::now();
    let reports = suite_reports(&["thm1.7-", "thm1.10-", "prop1.8-", "cor2.6-", "cor2.7-"]);
    let mut misses = Vec::new();
    let (u, eps) = (0.5, 1.0);
    let lhs = reports["thm1.7-rank-one"].terms["lhs"];
    near(&mut misses, "one-sided gap", lhs.value, lhs.se, std_sf(u) - std_sf(u) * std_sf(u - eps), 0.0);
    let p = reports["cor2.6-half-space"].terms["shifted_probability"];
    near(&mut misses, "shifted half-space", p.value, p.se, std_sf(-0.5), 0.0);
    let not_applicable = reports["thm1.10-rank-one"].verdict == Verdict::NotApplicable;
    let errorless_never_fail = reports.iter().filter(|(n, _)| n.starts_with("thm1.10-")).all(|(_, r)| !r.verdict.is_fail());

    let spacing = 0.5;
    let plan = CirculantPlan::new(&CovarianceModel::BargmannFock, &Grid::new(vec![24, 24], spacing).unwrap(), 1).unwrap();
    let torus = plan.torus_shape().to_vec();
    let q1 = exact_root_kernel(torus[0], spacing);
    let mut direct_err = 0.0f64;
    let mut exact_sigma_err = 0.0f64;
    let mut kernel_err = 0.0f64;
    for radius in [1.0, 1.5, 3.0] {
        let split = plan.finite_range_split(radius).unwrap();
        direct_err = direct_err.max((split.sigma2 - direct_tail_sum(&split.kernel, &torus, spacing, radius)).abs());
        let exact: Vec<f64> = (0..torus[0] * torus[1]).map(|i| q1[i / torus[1]] * q1[i % torus[1]]).collect();
        kernel_err = split.kernel.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(kernel_err, f64::max);
        exact_sigma_err = exact_sigma_err.max((split.sigma2 - direct_tail_sum(&exact, &torus, spacing, radius)).abs());
    }
    let bound_err = (finite_range_bound(36.0, 0.01, 1.0) - 108.0 * (-12.5f64).exp()).abs();
    let elapsed = t.elapsed();
    let failed = failures(&reports);
    let ok = reports.len() == 14
        && failed.is_empty()
        && misses.is_empty()
        && not_applicable
        && errorless_never_fail
        && direct_err <= 1e-10
        && kernel_err <= 1e-10
        && exact_sigma_err <= 1e-10
        && bound_err <= 1e-15
        && within(elapsed, 300.0);
    record(
        7,
        "one-sided, errorless, finite-range, isoperimetric and noise-stability bounds",
        ok,
        &format!(
            "{} configurations, failing {failed:?}, closed-form misses {misses:?}, rank-one errorless not-applicable \
             {not_applicable}, tail variance vs direct sum {direct_err:.2e}, kernel vs exact lattice root {kernel_err:.2e}, tail variance vs exact \
             {exact_sigma_err:.2e}; {:.1}s",
            reports.len(),
            elapsed.as_secs_f64()
        ),
    );
}

const POLYLOG_DELTA: f64 = 0.25;
const DECOUPLING_C: f64 = 36.0;

/// Closure and a 20-step recursion for `g(r) = (log(1 + r))^{-3.5}`.
fn closure_run() -> (RecursionReport, f64) {
    let profile = Profile::from_g(Decay::Polylog { gamma: 3.5 }, POLYLOG_DELTA);
    let n_d = annulus_covering(2, 1.0).unwrap().n_d;
    let closure = find_closure(&profile, None, n_d, DECOUPLING_C).unwrap();
    let input = RecursionInput {
        profile,
        h_prime: None,
        n_d,
        c: DECOUPLING_C,
        ln_r0: closure.ln_r0,
        p1: closure.max_p1,
        c_prime: None,
        n_steps: 20,
    };
    let rep = run_recursion(&input).unwrap();
    let limit = sprinkle_schedule_ln(closure.ln_r0, POLYLOG_DELTA, 0.0, 10_000).unwrap().limit_lower_bound;
    (rep, limit)
}

#[test]
fn criterion_08_bootstrap_engine() {
    let _g = serial();
    let t = Instant::now();
    let (rep, limit) = closure_run();
    let slow = Profile::from_g(Decay::Polylog { gamma: 1.5 }, POLYLOG_DELTA);
    let rejection = check_subcritical_conditions(&slow, None).unwrap();
    let elapsed = t.elapsed();
    let rejected = !rejection.holds
        && !rejection.h_vanishes
        && rejection.diagnostics.iter().any(|d| d.contains("does not tend to 0"));
    let ok = rep.certified
        && rep.scale_condition
        && rep.base_condition
        && rep.q.iter().zip(&rep.targets).all(|(q, b)| q <= b)
        && limit.is_finite()
        && rejected
        && within(elapsed, 1.0);
    record(
        8,
        "bootstrap closure and rejection",
        ok,
        &format!(
            "ln R0 = {:.6e}, p1 = {:.3e}, certified {}, limit lower bound {limit:.4}, slow profile rejected {rejected} \
             ({:?}); {:.3}s",
            rep.ln_r0,
            rep.p1,
            rep.certified,
            rejection.diagnostics,
            elapsed.as_secs_f64()
        ),
    );
}

/// The twenty-step contraction `q_20 < 1e-6 q_1`. At the closure radius the
/// forcing term `c n_d² h(R₀ 5ⁿ)` barely moves over twenty scales
/// (`ln R₀` is about 2.3e8 while twenty steps add 32 to it), so `q_n` settles
/// near that term and the ratio stays around one half.
#[test]
fn criterion_08_twenty_step_contraction() {
    let _g = serial();
    let (rep, _) = closure_run();
    let ratio = rep.q[19] / rep.q[0];
    record(
        8,
        "twenty-step contraction q_20 < 1e-6 q_1",
        ratio < 1e-6,
        &format!("q_1 = {:.4e}, q_20 = {:.4e}, ratio {ratio:.4}", rep.q[0], rep.q[19]),
    );
}

#[test]
fn criterion_09_percolation_desk_experiment() {
    let _g = serial();
    let t = Instant::now();
    let bf = CovarianceModel::BargmannFock;
    let square = estimate_crossing(&bf, 0.5, 0.0, 32.0, CrossingKind::Square, 2_000, 909).unwrap();
    let envelope = Decay::StretchedExp { c: 0.01, beta: 1.0 };
    let table = subcritical_decay_table(&bf, 0.5, -0.5, &[8.0, 16.0, 32.0], 2_000, 910, Some(envelope)).unwrap();
    let elapsed = t.elapsed();
    let estimates: Vec<f64> = table.rows.iter().map(|r| r.estimate).collect();
    let per_replicate_radius = table.thresholds.iter().all(|row| row.windows(2).all(|w| w[0] <= w[1]));
    let ells: Vec<f64> = (0..=40).map(|k| -2.0 + 0.1 * k as f64).collect();
    let per_level = (0..3).all(|k| {
        let column: Vec<f64> = table.thresholds.iter().map(|row| row[k]).collect();
        let curve = sprinkle::bootstrap::level_curve(&column, &ells);
        curve.windows(2).all(|w| w[0] <= w[1])
    }) && table.thresholds.iter().all(|row| {
        row.iter().all(|&tr| ells.iter().all(|&l| (tr <= l) <= (tr <= l + 0.1)))
    });
    let p = square.estimate.value;
    let ok = (0.4..=0.6).contains(&p)
        && table.nonincreasing
        && estimates.windows(2).all(|w| w[1] <= w[0])
        && per_replicate_radius
        && per_level
        && within(elapsed, 600.0);
    record(
        9,
        "percolation desk experiment",
        ok,
        &format!(
            "square crossing {p:.4} ± {:.4}; one-arm at -0.5 over radii 8, 16, 32: {estimates:?}; per-replicate \
             monotone in radius {per_replicate_radius}, in level {per_level}; {:.1}s",
            square.estimate.se,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_10_determinism_across_workers() {
    let _g = serial();
    let t = Instant::now();
    let one = run_suite(SuiteId::Smoke, Some(1)).unwrap();
    let eight = run_suite(SuiteId::Smoke, Some(8)).unwrap();
    let elapsed = t.elapsed();
    let differing: Vec<&str> = one
        .configs
        .iter()
        .zip(one.reports.iter().zip(&eight.reports))
        .filter(|(_, (a, b))| a.canonical_json().unwrap() != b.canonical_json().unwrap())
        .map(|(c, _)| c.name.as_str())
        .collect();
    let same_csv = one.summary_csv().unwrap() == eight.summary_csv().unwrap();
    let ok = one.reports.len() == eight.reports.len() && differing.is_empty() && same_csv;
    record(
        10,
        "determinism across worker counts",
        ok,
        &format!(
            "{} smoke reports, differing {differing:?}, summary identical {same_csv}; {:.1}s",
            one.reports.len(),
            elapsed.as_secs_f64()
        ),
    );
}
