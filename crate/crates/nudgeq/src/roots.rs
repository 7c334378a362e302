//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Find a root of `f` inside `(lo, hi)` given `f(lo) < 0 < f(hi)`, by
/// bisection run to floating-point exhaustion. Returns the midpoint of the
/// final bracket. The caller is responsible for supplying a valid bracket;
/// an invalid one is reported as an inconsistency.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Inconsistency(format!(
            "bisect bracket [{lo}, {hi}] has signs ({flo:.3e}, {fhi:.3e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket has collapsed to adjacent floats
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
