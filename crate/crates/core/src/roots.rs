//! Bracketed scalar root finding.
//!
//! Bisection guarded Illinois (modified regula falsi) steps: the secant
//! estimate is used while it keeps shrinking the bracket by at least half
//! every two iterations, otherwise a bisection step is forced.

use crate::error::{Error, Result};

/// Relative bracket width at which iteration stops. Tighter than the
/// 1e-12 needed by callers, because wavevector round trips near band edges
/// amplify frequency errors by the local condition number.
pub const DEFAULT_RTOL: f64 = 4.0 * f64::EPSILON;

const MAX_ITERATIONS: usize = 400;

/// Root of `f` in `[lo, hi]` given `f(lo)` and `f(hi)` of opposite sign.
pub fn bracketed_root<F>(f: F, lo: f64, hi: f64, f_lo: f64, f_hi: f64, rtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(lo < hi) || f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::InvalidBracket { lo, hi });
    }

    let (mut a, mut fa, mut b, mut fb) = (lo, f_lo, hi, f_hi);
    // side of the last retained endpoint: -1 for a, +1 for b
    let mut side = 0i8;
    let mut width_two_ago = f64::INFINITY;
    let mut width_one_ago = b - a;

    for _ in 0..MAX_ITERATIONS {
        let width = b - a;
        let scale = a.abs().max(b.abs());
        if width <= rtol * scale || width <= f64::MIN_POSITIVE {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }

        let force_bisect = width > 0.5 * width_two_ago;
        let mut x = if force_bisect {
            0.5 * (a + b)
        } else {
            a - fa * (b - a) / (fb - fa)
        };
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
            if !(x > a && x < b) {
                // no representable point strictly inside
                return Ok(if fa.abs() < fb.abs() { a } else { b });
            }
        }

        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(Error::InvalidBracket { lo: a, hi: b });
        }

        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if force_bisect {
            side = 0;
        }
        width_two_ago = width_one_ago;
        width_one_ago = width;
    }
    Ok(0.5 * (a + b))
}

/// Bisection on `(lo, hi)` when only the signs at the endpoints are known:
/// `f < 0` just above `lo` and `f > 0` just below `hi`. Endpoints are never
/// evaluated, so they may sit on poles. Runs to machine precision.
pub fn bisect_by_sign<F>(f: F, lo: f64, hi: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    loop {
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            return mid;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
}
