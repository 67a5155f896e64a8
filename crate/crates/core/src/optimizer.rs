//! Utility-maximizing SIR, efficiency inversion and the utility factor `b f / gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::{q_tail_inv, Efficiency, ModScheme, PacketConfig};
use crate::scalar::Scalar;
use crate::solve::{bracket_increasing, safeguarded_newton};

/// Largest SIR (linear) the bracketing searches explore.
pub const GAMMA_LIMIT: f64 = 1e8;

const MAX_ITER: usize = 400;

/// The unconstrained energy-efficient operating point of one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumPoint<T> {
    pub gamma_star: T,
    pub f_at_star: T,
    /// `b f(gamma*) / gamma*`
    pub utility_factor: T,
    /// `|f - gamma f'| / f` at the returned root.
    pub residual: T,
}

/// Second derivative of the efficiency by central difference of the analytic slope.
fn curvature<T: Scalar>(eff: &Efficiency<T>, gamma: T) -> T {
    let h = T::epsilon().cbrt();
    let up = eff.slope_unchecked(gamma * (T::one() + h));
    let down = eff.slope_unchecked(gamma * (T::one() - h));
    (up - down) / (T::lit(2.0) * gamma * h)
}

/// Solves `f(gamma) = gamma f'(gamma)`, the stationarity condition of `f / gamma`.
pub fn gamma_star<T: Scalar>(scheme: &ModScheme<T>, pkt: PacketConfig) -> Result<OptimumPoint<T>> {
    let eff = Efficiency::new(scheme, pkt);
    let g = |x: T| eff.value_unchecked(x) - x * eff.slope_unchecked(x);
    let bracket = bracket_increasing(g, T::one(), T::lit(2.0), T::lit(GAMMA_LIMIT)).ok_or_else(|| {
        Error::Solver(format!("no stationary point of f/gamma in (0, {GAMMA_LIMIT:e}] for b = {}", scheme.bits()))
    })?;
    let root = safeguarded_newton(g, |x| -x * curvature(&eff, x), bracket, T::epsilon() * T::lit(4.0), MAX_ITER)?;
    let f = eff.value_unchecked(root);
    let residual = (g(root) / f).abs();
    if !(residual <= T::solver_tol() * T::lit(100.0)) {
        return Err(Error::Solver(format!("stationarity residual {residual} too large")));
    }
    Ok(OptimumPoint { gamma_star: root, f_at_star: f, utility_factor: T::count(scheme.bits()) * f / root, residual })
}

/// Closed-form inverse that ignores the `2^-L` floor:
/// `(1/beta) [Q^-1((1 - eta^(b/2L)) / alpha)]^2`. Uncoded law only; kept for diagnostics.
pub fn invert_efficiency_approx<T: Scalar>(scheme: &ModScheme<T>, pkt: PacketConfig, eta: T) -> Result<T> {
    check_target(pkt, eta)?;
    let b = T::count(scheme.bits());
    let arg = (T::one() - eta.powf(b / T::count(2 * pkt.bits()))) / scheme.alpha();
    let x = q_tail_inv(arg)?;
    Ok(x * x / scheme.beta())
}

/// Exact inverse of the uncoded law (floor included); the Q^-1 argument must be < 1/2.
fn uncoded_exact_inverse<T: Scalar>(scheme: &ModScheme<T>, pkt: PacketConfig, eta: T) -> Option<T> {
    let b = T::count(scheme.bits());
    let survive = (eta + pkt.guess_floor::<T>()).powf(b / T::count(2 * pkt.bits()));
    let arg = (T::one() - survive) / scheme.alpha();
    if !(arg > T::zero() && arg < T::lit(0.5)) {
        return None;
    }
    let x = q_tail_inv(arg).ok()?;
    Some(x * x / scheme.beta())
}

fn check_target<T: Scalar>(pkt: PacketConfig, eta: T) -> Result<()> {
    if !(eta >= T::zero()) {
        return Err(Error::Domain(format!("target efficiency must be >= 0, got {eta}")));
    }
    let ceiling = pkt.ceiling::<T>();
    if eta >= ceiling {
        return Err(Error::InfeasibleTarget { target: eta.to_f64_lossy(), ceiling: ceiling.to_f64_lossy() });
    }
    Ok(())
}

/// Smallest SIR achieving packet-success probability `eta`: `f^-1(eta)`.
pub fn invert_efficiency<T: Scalar>(scheme: &ModScheme<T>, pkt: PacketConfig, eta: T) -> Result<T> {
    check_target(pkt, eta)?;
    if eta == T::zero() {
        return Ok(T::zero());
    }
    let eff = Efficiency::new(scheme, pkt);
    let seed = uncoded_exact_inverse(scheme, pkt, eta)
        .map(|h| match scheme.coding() {
            // effective SIR h = gamma G(gamma); one fixed-point step
            Some(code) => h / code.gain.value(h),
            None => h,
        })
        .filter(|s| *s > T::zero() && s.is_finite())
        .unwrap_or(T::one());
    let resid = |x: T| eff.value_unchecked(x) - eta;
    let bracket = bracket_increasing(resid, seed, T::lit(1.5), T::lit(GAMMA_LIMIT))
        .ok_or_else(|| Error::Solver(format!("efficiency {eta} not reached below SIR {GAMMA_LIMIT:e}")))?;
    safeguarded_newton(resid, |x| eff.slope_unchecked(x), bracket, T::epsilon() * T::lit(4.0), MAX_ITER)
}

/// `b f(gamma) / gamma`: utility in units of `B h_hat`.
pub fn utility_factor<T: Scalar>(scheme: &ModScheme<T>, pkt: PacketConfig, gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(Error::Domain(format!("utility factor needs SIR > 0, got {gamma}")));
    }
    let f = Efficiency::new(scheme, pkt).value(gamma)?;
    Ok(T::count(scheme.bits()) * f / gamma)
}
