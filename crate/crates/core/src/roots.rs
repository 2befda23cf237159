//! Scalar root finding on a sign-changing bracket.

use crate::error::{Error, Result};

/// Plain bisection. Stops when the bracket is narrower than `xtol` or after `max_iter` halvings.
pub fn bisect(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton's method safeguarded by bisection. `f` returns `(value, derivative)`.
///
/// The iterate never leaves the current bracket; iteration stops at machine
/// resolution of the bracket or when the Newton step drops below `xtol`.
pub fn newton_bisect(
    mut f: impl FnMut(f64) -> (f64, f64),
    lo: f64,
    hi: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    // orient so that g(a) < 0 < g(b)
    let (mut a, mut b) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);
    for _ in 0..max_iter {
        if fx == 0.0 {
            return Ok(x);
        }
        let newton_ok = dfx != 0.0 && dfx.is_finite() && {
            let cand = x - fx / dfx;
            (cand - a) * (cand - b) < 0.0 && (2.0 * fx).abs() <= (dx_old * dfx).abs()
        };
        dx_old = dx;
        if newton_ok {
            dx = fx / dfx;
            x -= dx;
        } else {
            dx = 0.5 * (b - a);
            x = a + dx;
        }
        if dx.abs() <= xtol.max(2.0 * f64::EPSILON * x.abs())
            || (a - b).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
        {
            return Ok(x);
        }
        let (v, d) = f(x);
        fx = v;
        dfx = d;
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
    }
    Ok(x)
}

/// Doubles `hi` starting from `start` until `pred(hi)` holds. Returns `None` after `max_doublings`.
pub fn grow_until(
    mut pred: impl FnMut(f64) -> bool,
    start: f64,
    max_doublings: usize,
) -> Option<f64> {
    let mut hi = start;
    for _ in 0..max_doublings {
        if pred(hi) {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}
