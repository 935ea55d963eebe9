use crate::error::{Error, Result};

/// Bisection for an increasing function on `[lo, hi]`.
///
/// Requires `f(lo) ≤ 0 ≤ f(hi)`. Stops when the bracket is narrower than
/// `x_tol`, when `f` hits zero exactly, or after `max_iter` halvings, and
/// returns the bracket midpoint.
pub fn bisect_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::Bracket(format!("empty bracket [{lo}, {hi}]")));
    }
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket("objective is NaN at bracket ends".into()));
    }
    if f_lo > 0.0 {
        return Err(Error::Bracket(format!("root lies below {lo}")));
    }
    if f_hi < 0.0 {
        return Err(Error::Bracket(format!("root lies above {hi}")));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
