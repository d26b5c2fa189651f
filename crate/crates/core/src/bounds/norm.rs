use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{l2, Matrix};
use crate::rng;

pub const NORM_TOL: f64 = 1e-10;
const MAX_ITER: usize = 200_000;

/// Largest singular value by power iteration on `MᵀM`, stopped when the
/// estimate changes by less than `rel_tol` relative to itself. The start
/// vector is a fixed pseudo-random draw, so the result is deterministic.
pub fn operator_norm_l2(m: &Matrix, rel_tol: f64) -> Result<f64> {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return Ok(0.0);
    }
    if m.as_slice().iter().all(|x| *x == 0.0) {
        return Ok(0.0);
    }
    let mut g = rng::stream(0x6e6f726d, 0);
    let mut v: Vec<f64> = (0..n).map(|_| 0.5 + g.gen::<f64>()).collect();
    let s = l2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut est = 0.0;
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITER {
        let w = m.tmul_vec(&m.mul_vec(&v));
        let lambda = l2(&w);
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let next = lambda.sqrt();
        residual = (next - est).abs() / next;
        // two agreeing steps guard against a stall on a tiny component
        if it > 2 && residual < rel_tol {
            return Ok(next);
        }
        est = next;
        v = w.into_iter().map(|x| x / lambda).collect();
    }
    Err(Error::NonConvergence { iterations: MAX_ITER, residual })
}
