//! Standard Gaussian tail `Q(x) = P{Z > x}` and its inverse.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Standard normal density.
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    (-(x * x) / T::lit(2.0)).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

/// Gaussian tail probability `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_tail<T: Scalar>(x: T) -> T {
    (x / T::SQRT_2()).erfc() / T::lit(2.0)
}

// Acklam's rational approximation of the standard normal quantile.
#[allow(clippy::excessive_precision)]
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
const P_LOW: f64 = 0.02425;

fn horner<T: Scalar>(coeffs: &[f64], x: T) -> T {
    coeffs.iter().fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// Lower-tail standard normal quantile, approximation only (relative error ~1e-9).
fn normal_quantile_approx<T: Scalar>(p: T) -> T {
    let p_low = T::lit(P_LOW);
    let one = T::one();
    if p < p_low {
        let q = (T::lit(-2.0) * p.ln()).sqrt();
        horner(&C, q) / (horner(&D, q) * q + one)
    } else if p <= one - p_low {
        let q = p - T::lit(0.5);
        let r = q * q;
        horner(&A, r) * q / (horner(&B, r) * r + one)
    } else {
        let q = (T::lit(-2.0) * (one - p).ln()).sqrt();
        -horner(&C, q) / (horner(&D, q) * q + one)
    }
}

/// Inverse Gaussian tail: the `x` with `Q(x) = p`, for `p` in `(0, 1)`.
///
/// Seeded with a rational quantile approximation and polished by one Newton
/// step on `Q(x) - p`.
pub fn q_tail_inv<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!("Q^-1 needs p in (0, 1), got {p}")));
    }
    // Q(x) = p  <=>  Phi(-x) = p
    let x = -normal_quantile_approx(p);
    let pdf = normal_pdf(x);
    if pdf > T::zero() {
        Ok(x + (q_tail(x) - p) / pdf)
    } else {
        Ok(x)
    }
}
