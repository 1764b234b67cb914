use crate::error::{Error, Result};

use super::report::CriterionReport;

/// Bisection for the visibility at which a criterion verdict flips.
///
/// `eval(v)` must be monotone in `v`: the verdict at `v = 0` differs from the
/// one at `v = 1` and changes once in between. Returns the midpoint of the
/// final bracket, which has width at most `tol`.
pub fn visibility_threshold<F>(mut eval: F, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<CriterionReport>,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bisection tolerance {tol} must be positive")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let at_lo = eval(lo)?.pass;
    if eval(hi)?.pass == at_lo {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)?.pass == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
