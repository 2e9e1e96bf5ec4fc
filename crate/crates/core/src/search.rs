//! Deterministic derivative-free maximisation on an interval.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Points per refinement grid.
pub const GRID_POINTS: usize = 1025;
const MAX_ROUNDS: usize = 80;

/// Maximises `f` over `[0, 1]` where `f` returns `None` off the feasible set.
///
/// Evaluates a 1025-point grid, then repeatedly re-grids the four cells
/// around the incumbent until two successive maxima differ by less than
/// `tol`. Returns `Ok(None)` when no grid point is feasible.
pub fn refine_max_unit<T: Real>(mut f: impl FnMut(T) -> Option<T>, tol: T) -> Result<Option<(T, T)>> {
    let mut lo = T::zero();
    let mut hi = T::one();
    let mut best: Option<(T, T)> = None;
    let mut prev: Option<T> = None;
    let last = T::lit((GRID_POINTS - 1) as f64);
    for _ in 0..MAX_ROUNDS {
        let step = (hi - lo) / last;
        let mut round_best: Option<(usize, T, T)> = None;
        for i in 0..GRID_POINTS {
            let x = if i + 1 == GRID_POINTS { hi } else { lo + step * T::lit(i as f64) };
            if let Some(y) = f(x) {
                if round_best.is_none_or(|(_, _, by)| y > by) {
                    round_best = Some((i, x, y));
                }
            }
        }
        let Some((idx, x, y)) = round_best else {
            return Ok(best);
        };
        if best.is_none_or(|(_, by)| y > by) {
            best = Some((x, y));
        }
        let current = best.map(|b| b.1).unwrap_or(y);
        if let Some(p) = prev {
            if (current - p).abs() < tol {
                return Ok(best);
            }
        }
        prev = Some(current);
        let two = T::lit(2.0);
        let new_lo = (lo + step * (T::lit(idx as f64) - two)).max(lo);
        let new_hi = (lo + step * (T::lit(idx as f64) + two)).min(hi);
        if new_hi - new_lo <= T::epsilon() * T::lit(4.0) {
            return Ok(best);
        }
        lo = new_lo;
        hi = new_hi;
    }
    Err(Error::NonConvergence {
        what: "grid refinement",
        iterations: MAX_ROUNDS,
    })
}
