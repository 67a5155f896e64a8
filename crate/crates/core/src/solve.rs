//! Scalar root finding: geometric bracket expansion and a bisection-safeguarded
//! Newton iteration.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bracket<T> {
    pub lo: T,
    pub hi: T,
}

/// Brackets the root of a function that is negative below it and positive
/// above it, stepping geometrically by `factor` from `start` in the direction
/// of the sign change while staying inside `(0, limit]`.
pub(crate) fn bracket_increasing<T: Scalar>(f: impl Fn(T) -> T, start: T, factor: T, limit: T) -> Option<Bracket<T>> {
    let f0 = f(start);
    if f0 == T::zero() {
        return Some(Bracket { lo: start, hi: start });
    }
    let floor = T::min_positive_value().sqrt();
    let mut x = start;
    if f0 < T::zero() {
        while x < limit {
            let next = (x * factor).min(limit);
            if f(next) >= T::zero() {
                return Some(Bracket { lo: x, hi: next });
            }
            x = next;
        }
    } else {
        while x > floor {
            let next = x / factor;
            if f(next) <= T::zero() {
                return Some(Bracket { lo: next, hi: x });
            }
            x = next;
        }
    }
    None
}

/// Root of `f` inside a sign-changing bracket. Newton steps (using `df`) are
/// taken while they stay inside the bracket and shrink it fast enough;
/// otherwise the step falls back to bisection. Converges when the step is
/// below `x_tol * |x|`.
pub(crate) fn safeguarded_newton<T: Scalar>(
    f: impl Fn(T) -> T,
    df: impl Fn(T) -> T,
    bracket: Bracket<T>,
    x_tol: T,
    max_iter: usize,
) -> Result<T> {
    let Bracket { mut lo, mut hi } = bracket;
    if lo == hi {
        return Ok(lo);
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Solver(format!("no sign change on [{lo}, {hi}]")));
    }
    // orient so that f(lo) < 0 < f(hi)
    if f_lo > T::zero() {
        std::mem::swap(&mut lo, &mut hi);
    }
    let two = T::lit(2.0);
    let mut x = (lo + hi) / two;
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let mut fx = f(x);
    let mut dfx = df(x);
    for _ in 0..max_iter {
        let newton_out = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > T::zero();
        let slow = (two * fx).abs() > (dx_old * dfx).abs();
        if newton_out || slow || !dfx.is_finite() || dfx == T::zero() {
            dx_old = dx;
            dx = (hi - lo) / two;
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x = x - dx;
        }
        if dx.abs() <= x_tol * x.abs() || (hi - lo).abs() <= x_tol * x.abs() {
            return Ok(x);
        }
        fx = f(x);
        if fx == T::zero() {
            return Ok(x);
        }
        dfx = df(x);
        if fx < T::zero() {
            lo = x;
        } else {
            hi = x;
        }
    }
    Err(Error::Solver(format!("no convergence after {max_iter} iterations (last x = {x})")))
}
