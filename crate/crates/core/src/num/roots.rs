//! Root bracketing for monotone functions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solve `f(x) = target` for monotone `f` on `[lo, hi]` by bisection.
///
/// Works for increasing or decreasing `f` (the direction is read off the
/// endpoint values). The target must be bracketed. Converges to a relative
/// interval width of `xtol_rel` (floored at a few ulps).
pub fn bisect_monotone<S: Scalar>(
    f: impl Fn(S) -> S,
    lo: S,
    hi: S,
    target: S,
    xtol_rel: S,
) -> Result<S> {
    if !(hi > lo) {
        return Err(Error::usage("bisection interval is empty"));
    }
    let f_lo = f(lo) - target;
    let f_hi = f(hi) - target;
    if f_lo == S::zero() {
        return Ok(lo);
    }
    if f_hi == S::zero() {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::numerics(format!(
            "target not bracketed: f-target has signs {:?} and {:?} at the ends",
            f_lo, f_hi
        )));
    }
    let mut a = lo;
    let mut b = hi;
    let mut f_a = f_lo;
    for _ in 0..200 {
        let mid = S::of(0.5) * (a + b);
        if mid <= a || mid >= b {
            break; // f64 resolution reached
        }
        let f_mid = f(mid) - target;
        if f_mid == S::zero() {
            return Ok(mid);
        }
        if f_mid.signum() == f_a.signum() {
            a = mid;
            f_a = f_mid;
        } else {
            b = mid;
        }
        let scale = a.abs().max(b.abs()).max(S::of(1e-30));
        if (b - a) / scale < xtol_rel {
            break;
        }
    }
    Ok(S::of(0.5) * (a + b))
}
