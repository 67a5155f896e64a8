//! Per-user M/G/1 delay model: ARQ retransmissions give a geometric number of
//! packet slots per service, and the Pollaczek-Khinchine mean bounds the
//! admissible operating points.

mod sim;

pub use sim::{simulate_queue, SimConfig, SimReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::gamma_star;
use crate::phy::{Efficiency, ModScheme, PacketConfig};
use crate::scalar::Scalar;

/// Queues with `f - lambda tau` below this are treated as unstable.
pub const STABILITY_MARGIN: f64 = 1e-12;

/// Traffic and delay requirement of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficQos<T> {
    /// Poisson packet arrival rate (packets/s).
    pub lambda: T,
    pub pkt: PacketConfig,
    /// Bound on the mean total delay (s).
    pub delay_bound: T,
}

impl<T: Scalar> TrafficQos<T> {
    pub fn new(lambda: T, pkt: PacketConfig, delay_bound: T) -> Result<Self> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::Config(format!("arrival rate must be finite and >= 0, got {lambda}")));
        }
        if !(delay_bound > T::zero()) {
            return Err(Error::Config(format!("delay bound must be > 0, got {delay_bound}")));
        }
        Ok(Self { lambda, pkt, delay_bound })
    }

    /// Source rate `L lambda` in bits/s.
    pub fn source_rate(&self) -> T {
        T::count(self.pkt.bits()) * self.lambda
    }
}

/// A transmission rate: symbol rate and constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRate<T> {
    pub symbol_rate: T,
    pub scheme: ModScheme<T>,
}

impl<T: Scalar> LinkRate<T> {
    pub fn new(scheme: ModScheme<T>, symbol_rate: T) -> Result<Self> {
        if !(symbol_rate > T::zero()) || !symbol_rate.is_finite() {
            return Err(Error::Domain(format!("symbol rate must be finite and > 0, got {symbol_rate}")));
        }
        Ok(Self { symbol_rate, scheme })
    }

    /// `R = b R_s` in bits/s.
    pub fn bit_rate(&self) -> T {
        T::count(self.scheme.bits()) * self.symbol_rate
    }
}

/// Duration of one packet transmission, `L / (b R_s)` (ACK turnaround neglected).
pub fn packet_time<T: Scalar>(link: &LinkRate<T>, pkt: PacketConfig) -> T {
    T::count(pkt.bits()) / link.bit_rate()
}

/// Pollaczek-Khinchine mean total delay for slot length `tau`, arrival rate
/// `lambda` and per-slot success probability `success`.
pub fn pk_mean_delay<T: Scalar>(tau: T, lambda: T, success: T) -> Result<T> {
    let load = lambda * tau;
    if !(success - load >= T::lit(STABILITY_MARGIN)) {
        return Err(Error::Unstable { success: success.to_f64_lossy(), load: load.to_f64_lossy() });
    }
    Ok(tau * (T::one() - load / T::lit(2.0)) / (success - load))
}

/// Mean delay (queueing plus transmission) of the link at SIR `gamma`.
pub fn avg_delay<T: Scalar>(link: &LinkRate<T>, traffic: &TrafficQos<T>, gamma: T) -> Result<T> {
    let tau = packet_time(link, traffic.pkt);
    let f = Efficiency::new(&link.scheme, traffic.pkt).value(gamma)?;
    pk_mean_delay(tau, traffic.lambda, f)
}

/// Minimum per-transmission success probability meeting the delay bound:
/// `W <= D` iff `f(gamma) >= eta`.
pub fn eta_threshold<T: Scalar>(link: &LinkRate<T>, traffic: &TrafficQos<T>) -> Result<T> {
    eta_at_bit_rate(link.bit_rate(), traffic)
}

pub(crate) fn eta_at_bit_rate<T: Scalar>(bit_rate: T, traffic: &TrafficQos<T>) -> Result<T> {
    let l = T::count(traffic.pkt.bits());
    let d = traffic.delay_bound;
    let min_rate = l / d;
    if bit_rate < min_rate {
        return Err(Error::DelayUnsatisfiable { bit_rate: bit_rate.to_f64_lossy(), min_rate: min_rate.to_f64_lossy() });
    }
    Ok(eta_formula(bit_rate, l, traffic.lambda, d))
}

fn eta_formula<T: Scalar>(r: T, l: T, lambda: T, d: T) -> T {
    let tau = l / r;
    tau * lambda + tau / d - tau * tau * lambda / (T::lit(2.0) * d)
}

/// Left-hand side of the feasibility test at the maximal symbol rate
/// `R_s = B`; the traffic is feasible at `bits` iff this is `< 1`.
pub fn feasibility_residual<T: Scalar>(bits: u32, traffic: &TrafficQos<T>, bandwidth: T) -> T {
    let l = T::count(traffic.pkt.bits());
    eta_formula(T::count(bits) * bandwidth, l, traffic.lambda, traffic.delay_bound)
}

/// Whether `(lambda, D)` can be served with `bits` bits/symbol within bandwidth `B`.
pub fn qos_feasible<T: Scalar>(bits: u32, traffic: &TrafficQos<T>, bandwidth: T) -> bool {
    if !(bandwidth > T::zero()) {
        return false;
    }
    feasibility_residual(bits, traffic, bandwidth) < T::one()
}

/// Infimum of the bit rates `b R_s` that make the delay bound attainable.
pub fn omega_infinity<T: Scalar>(traffic: &TrafficQos<T>) -> T {
    let l = T::count(traffic.pkt.bits());
    let dl = traffic.delay_bound * traffic.lambda;
    (l / traffic.delay_bound) * (T::one() + dl + (T::one() + dl * dl).sqrt()) / T::lit(2.0)
}

/// Bit rate at which the delay-driven SIR floor equals the optimum SIR with
/// success probability `f_star`.
pub fn omega_star_from<T: Scalar>(f_star: T, traffic: &TrafficQos<T>) -> T {
    let l = T::count(traffic.pkt.bits());
    let dl = traffic.delay_bound * traffic.lambda;
    let root = (T::one() + dl * dl + T::lit(2.0) * (T::one() - f_star) * dl).sqrt();
    (l / traffic.delay_bound) * (T::one() + dl + root) / (T::lit(2.0) * f_star)
}

pub fn omega_star<T: Scalar>(scheme: &ModScheme<T>, traffic: &TrafficQos<T>) -> Result<T> {
    Ok(omega_star_from(gamma_star(scheme, traffic.pkt)?.f_at_star, traffic))
}
