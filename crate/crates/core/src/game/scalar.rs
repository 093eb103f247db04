//! Scalar box-constrained optimization used as the best-response fallback.

use super::{ActionBox, Sense};
use crate::error::{Error, Result};

/// Iteration cap for each bracketed root refinement.
pub const SCALAR_MAX_ITERATIONS: usize = 200;

/// Derivative sign changes are searched on this many uniform cells.
const SCAN_CELLS: usize = 256;

/// Optimizes a smooth scalar objective over a box.
///
/// `objective` returns `(value, derivative)`. The derivative is scanned on a
/// uniform grid; every cell where the descent derivative changes sign from
/// negative to non-negative is refined by safeguarded Newton with bisection
/// fallback. The interior candidates and both endpoints are then compared by
/// value, ties going to the smaller action.
pub fn solve_scalar_box<F>(mut objective: F, bounds: ActionBox, sense: Sense) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let s = sense.descent_sign();
    let mut h = |x: f64| {
        let (v, d) = objective(x);
        (s * v, s * d)
    };

    let lo = bounds.lower();
    let hi = bounds.upper();
    let step = bounds.width() / SCAN_CELLS as f64;
    let nodes: Vec<f64> = (0..=SCAN_CELLS)
        .map(|k| if k == SCAN_CELLS { hi } else { lo + step * k as f64 })
        .collect();
    let slopes: Vec<f64> = nodes.iter().map(|&x| h(x).1).collect();

    let mut candidates = vec![lo];
    for k in 0..SCAN_CELLS {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let (da, db) = (slopes[k], slopes[k + 1]);
        if da == 0.0 && k > 0 {
            candidates.push(a);
        }
        if da < 0.0 && db > 0.0 {
            candidates.push(refine_root(&mut h, a, b, da, db)?);
        }
    }
    candidates.push(hi);

    let mut best = candidates[0];
    let mut best_value = h(best).0;
    for &x in &candidates[1..] {
        let v = h(x).0;
        if v < best_value {
            best = x;
            best_value = v;
        }
    }
    Ok(best)
}

/// Finds a root of the descent derivative inside `[a, b]` given
/// `d(a) < 0 < d(b)`.
fn refine_root<H>(h: &mut H, mut a: f64, mut b: f64, mut da: f64, mut db: f64) -> Result<f64>
where
    H: FnMut(f64) -> (f64, f64),
{
    let mut x = 0.5 * (a + b);
    let mut best = (x, f64::INFINITY);
    for _ in 0..SCALAR_MAX_ITERATIONS {
        let d = h(x).1;
        if d.abs() < best.1 {
            best = (x, d.abs());
        }
        if d == 0.0 {
            return Ok(x);
        }
        if d < 0.0 {
            a = x;
            da = d;
        } else {
            b = x;
            db = d;
        }
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            return Ok(if da.abs() <= db.abs() { a } else { b });
        }

        let delta = 1e-7 * x.abs().max(1.0);
        let curvature = (h(x + delta).1 - h(x - delta).1) / (2.0 * delta);
        let newton = x - d / curvature;
        let mid = 0.5 * (a + b);
        x = if curvature > 0.0 && newton > a && newton < b {
            if (newton - x).abs() <= f64::EPSILON * x.abs().max(1.0) {
                // Newton has stalled at this point; accept it.
                return Ok(newton);
            }
            newton
        } else {
            mid
        };
    }
    Err(Error::Solver {
        iterations: SCALAR_MAX_ITERATIONS,
        residual: best.1,
    })
}
