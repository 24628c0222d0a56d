//! Bessel functions of the first kind for integer and half-integer order.

use crate::error::{param, Result};

fn is_order_supported(nu: f64) -> bool {
    nu >= 0.0 && (2.0 * nu).fract() == 0.0
}

fn gamma_half_integer(x: f64) -> f64 {
    // Γ(x) for x a positive integer or half-integer
    let mut v = if x.fract() == 0.0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if x.fract() == 0.0 { 1.0 } else { 0.5 };
    while k < x - 1e-9 {
        v *= k;
        k += 1.0;
    }
    v
}

/// `Γ(ν+1) (2/x)^ν J_ν(x)`, equal to 1 at `x = 0`.
pub fn normalized_bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !is_order_supported(nu) {
        return param(format!("Bessel order {nu} must be a nonnegative integer or half-integer"));
    }
    let x = x.abs();
    if x < 2.0 {
        // power series Σ (-x²/4)^k / (k! (ν+1)_k)
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= q / (k as f64 * (nu + k as f64));
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        return Ok(sum);
    }
    Ok(gamma_half_integer(nu + 1.0) * (2.0 / x).powf(nu) * bessel_j(nu, x)?)
}

/// `J_ν(x)` for `ν` a nonnegative integer or half-integer, by Miller's
/// backward recurrence normalised against a closed form.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    if !is_order_supported(nu) {
        return param(format!("Bessel order {nu} must be a nonnegative integer or half-integer"));
    }
    if x < 0.0 {
        return param("bessel_j is implemented for x ≥ 0");
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 { 1.0 } else { 0.0 });
    }
    let half = nu.fract() != 0.0;
    let base = if half { 0.5 } else { 0.0 };
    let target = (nu - base).round() as usize;
    let top = nu.max(x);
    let start = target.max(x as usize) + 2 * (40.0 * top).sqrt() as usize + 30;
    // j[k] ∝ J_{base + k}
    let mut j = vec![0.0f64; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        let order = base + k as f64;
        j[k - 1] = 2.0 * order / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let scale = if half {
        // J_{1/2} = √(2/(πx)) sin x, J_{3/2} = √(2/(πx)) (sin x / x - cos x)
        let pref = (2.0 / (std::f64::consts::PI * x)).sqrt();
        let j0 = pref * x.sin();
        let j1 = pref * (x.sin() / x - x.cos());
        if j0.abs() >= j1.abs() {
            j0 / j[0]
        } else {
            j1 / j[1]
        }
    } else {
        // J_0 + 2 Σ J_{2k} = 1
        let mut norm = j[0];
        let mut k = 2;
        while k <= start {
            norm += 2.0 * j[k];
            k += 2;
        }
        1.0 / norm
    };
    Ok(j[target] * scale)
}
