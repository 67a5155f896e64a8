//! Strategic layer: each user picks constellation, symbol rate and target SIR
//! to maximize bits per joule subject to its mean-delay bound; powers follow
//! from the matched-filter SIR equations.

mod equilibrium;
mod scene;
mod verify;

pub use equilibrium::{
    direct_utilities, equilibrium_utility, matched_filter_powers, matched_filter_sir, nash_equilibrium,
    nash_equilibrium_with, EquilibriumReport, UserOutcome,
};
pub use scene::{NetworkScene, SceneFile, UserFile, UserSpec};
pub use verify::{verify_equilibrium, Verdict, DEVIATION_TOLERANCE};

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optimizer::{gamma_star, invert_efficiency};
use crate::phy::{check_bits, ModScheme, TcmConfig};
use crate::queueing::{eta_at_bit_rate, feasibility_residual, omega_star_from, qos_feasible, TrafficQos};
use crate::scalar::Scalar;

pub const DEFAULT_B_MAX: u32 = 10;

/// Which branch of the best response is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// The unconstrained optimum SIR is reachable below the bandwidth.
    Optimum,
    /// Symbol rate pinned at the bandwidth; SIR raised to the delay floor.
    RateLimited,
}

/// Symbol-rate choice inside the best-response interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatePolicy {
    /// Smallest admissible rate; gives the Pareto-dominant equilibrium.
    #[default]
    ParetoDominant,
    /// Largest admissible rate (`R_s = B`).
    MaximalRate,
}

/// One user's action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strategy<T> {
    pub scheme: ModScheme<T>,
    pub symbol_rate: T,
    pub target_sir: T,
    /// Transmit power, set once the equilibrium powers are known.
    pub power: Option<T>,
}

impl<T: Scalar> Serialize for Strategy<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Strategy", 5)?;
        st.serialize_field("bits", &self.scheme.bits())?;
        st.serialize_field("coded", &self.scheme.is_coded())?;
        st.serialize_field("symbol_rate", &self.symbol_rate)?;
        st.serialize_field("target_sir", &self.target_sir)?;
        st.serialize_field("power", &self.power)?;
        st.end()
    }
}

/// Best response to fixed opponents; it depends only on the user's own
/// traffic and the bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct BestResponse<T> {
    pub strategy: Strategy<T>,
    pub regime: Regime,
    /// Every symbol rate in `[lo, hi]` with the same SIR is a best response.
    pub rate_interval: (T, T),
    /// `b f(gamma) / gamma` at the chosen SIR.
    pub utility_factor: T,
}

/// Resource share `(1 + B / (R_s gamma))^-1` of a user.
pub fn user_size<T: Scalar>(strategy: &Strategy<T>, bandwidth: T) -> T {
    let load = strategy.symbol_rate * strategy.target_sir;
    load / (load + bandwidth)
}

/// Lowest even `b <= b_max` for which the traffic is feasible within `bandwidth`.
pub fn lowest_feasible_bits<T: Scalar>(traffic: &TrafficQos<T>, bandwidth: T, b_max: u32) -> Result<u32> {
    check_bits(b_max)?;
    (2..=b_max).step_by(2).find(|&b| qos_feasible(b, traffic, bandwidth)).ok_or_else(|| Error::QosInfeasible {
        b_max,
        residual: feasibility_residual(b_max, traffic, bandwidth).to_f64_lossy(),
    })
}

/// Utility-maximizing (constellation, symbol rate, SIR) for one user.
///
/// The constellation is the lowest feasible one. The SIR is the unconstrained
/// optimum when the bit rate that makes it delay-compliant fits in the band,
/// otherwise the delay-driven floor at `R_s = B`.
pub fn best_response<T: Scalar>(
    traffic: &TrafficQos<T>,
    bandwidth: T,
    b_max: u32,
    coding: Option<&TcmConfig<T>>,
) -> Result<BestResponse<T>> {
    best_response_with(traffic, bandwidth, b_max, coding, RatePolicy::ParetoDominant)
}

pub fn best_response_with<T: Scalar>(
    traffic: &TrafficQos<T>,
    bandwidth: T,
    b_max: u32,
    coding: Option<&TcmConfig<T>>,
    policy: RatePolicy,
) -> Result<BestResponse<T>> {
    if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
        return Err(Error::Config(format!("bandwidth must be finite and > 0, got {bandwidth}")));
    }
    let bits = lowest_feasible_bits(traffic, bandwidth, b_max)?;
    let scheme = ModScheme::with_coding(bits, coding)?;
    let b = T::count(bits);
    let opt = gamma_star(&scheme, traffic.pkt)?;
    let rate_at_optimum = omega_star_from(opt.f_at_star, traffic) / b;

    let (regime, lo, target_sir) = if rate_at_optimum <= bandwidth {
        (Regime::Optimum, rate_at_optimum, opt.gamma_star)
    } else {
        let eta = eta_at_bit_rate(b * bandwidth, traffic)?;
        (Regime::RateLimited, bandwidth, invert_efficiency(&scheme, traffic.pkt, eta)?)
    };
    let symbol_rate = match policy {
        RatePolicy::ParetoDominant => lo,
        RatePolicy::MaximalRate => bandwidth,
    };
    let f = crate::phy::Efficiency::new(&scheme, traffic.pkt).value(target_sir)?;
    Ok(BestResponse {
        strategy: Strategy { scheme, symbol_rate, target_sir, power: None },
        regime,
        rate_interval: (lo, bandwidth),
        utility_factor: b * f / target_sir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::utility_factor;
    use crate::phy::PacketConfig;
    use crate::queueing::{avg_delay, LinkRate};
    use crate::scalar::to_db;

    const PKT: PacketConfig = PacketConfig::DEFAULT;

    fn traffic(lambda: f64, d: f64) -> TrafficQos<f64> {
        TrafficQos::new(lambda, PKT, d).unwrap()
    }

    #[test]
    fn loose_delay_picks_qpsk_at_optimum() {
        let bw = 1e6;
        // lambda L = 0.01 B, B D = 1e5
        let br = best_response(&traffic(100.0, 0.1), bw, 10, None).unwrap();
        assert_eq!(br.strategy.scheme.bits(), 2);
        assert_eq!(br.regime, Regime::Optimum);
        assert!((to_db(br.strategy.target_sir) - 9.1).abs() < 0.05);
        assert!(br.strategy.symbol_rate < bw);
        assert!((br.utility_factor - 0.1978).abs() < 5e-4);
    }

    #[test]
    fn tight_delay_pins_rate_and_raises_sir() {
        let bw = 1e6;
        // b = 2 feasible needs B D > ~50.1; optimum needs ~62.8
        let t = traffic(100.0, 55.0 / bw);
        assert!(qos_feasible(2, &t, bw));
        let br = best_response(&t, bw, 10, None).unwrap();
        assert_eq!(br.strategy.scheme.bits(), 2);
        assert_eq!(br.regime, Regime::RateLimited);
        assert_eq!(br.strategy.symbol_rate, bw);
        let opt = gamma_star(&br.strategy.scheme, PKT).unwrap();
        assert!(br.strategy.target_sir > opt.gamma_star);
        let link = LinkRate::new(br.strategy.scheme, bw).unwrap();
        let w = avg_delay(&link, &t, br.strategy.target_sir).unwrap();
        assert!((w / t.delay_bound - 1.0).abs() < 1e-9);
    }

    #[test]
    fn jumps_constellation_below_feasibility() {
        let bw = 1e6;
        let t = traffic(100.0, 40.0 / bw);
        assert!(!qos_feasible(2, &t, bw));
        let br = best_response(&t, bw, 10, None).unwrap();
        assert_eq!(br.strategy.scheme.bits(), 4);
    }

    #[test]
    fn infeasible_everywhere() {
        let t = traffic(100.0, 5.0 / 1e6);
        match best_response(&t, 1e6, 10, None) {
            Err(Error::QosInfeasible { b_max, residual }) => {
                assert_eq!(b_max, 10);
                assert!(residual >= 1.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(best_response(&traffic(1.0, 1.0), 1e6, 3, None).is_err());
        assert!(best_response(&traffic(1.0, 1.0), 0.0, 10, None).is_err());
    }

    #[test]
    fn bits_never_decrease_as_delay_tightens() {
        let bw = 1e6;
        let mut prev = 0;
        let mut prev_size = 0.0;
        for k in 0..300 {
            let d = 1e3 * 0.98f64.powi(k) / bw;
            let Ok(br) = best_response(&traffic(100.0, d), bw, 10, None) else { break };
            assert!(br.strategy.scheme.bits() >= prev);
            prev = br.strategy.scheme.bits();
            let phi = user_size(&br.strategy, bw);
            if br.strategy.scheme.bits() == 2 {
                assert!(phi >= prev_size);
                prev_size = phi;
            }
        }
        assert!(prev >= 6);
    }

    #[test]
    fn policy_switch_returns_interval_end() {
        let bw = 1e6;
        let t = traffic(100.0, 0.1);
        let lo = best_response_with(&t, bw, 10, None, RatePolicy::ParetoDominant).unwrap();
        let hi = best_response_with(&t, bw, 10, None, RatePolicy::MaximalRate).unwrap();
        assert_eq!(hi.strategy.symbol_rate, bw);
        assert_eq!(lo.strategy.symbol_rate, lo.rate_interval.0);
        assert_eq!(lo.strategy.target_sir, hi.strategy.target_sir);
        assert_eq!(lo.utility_factor, hi.utility_factor);
    }

    #[test]
    fn sizes() {
        let s = ModScheme::<f64>::uncoded(2).unwrap();
        let st = |rs: f64, g: f64| Strategy { scheme: s, symbol_rate: rs, target_sir: g, power: None };
        assert!((user_size(&st(1.0, 1.0), 3.0) - 0.25).abs() < 1e-15);
        assert!(user_size(&st(1e-12, 1e-3), 1.0) < 1e-14);
        assert!(user_size(&st(2.0, 1.0), 3.0) > user_size(&st(1.0, 1.0), 3.0));
        assert!(user_size(&st(1.0, 2.0), 3.0) > user_size(&st(1.0, 1.0), 3.0));
    }

    #[test]
    fn coded_best_response_uses_coded_optimum() {
        let cfg = TcmConfig::default_trellis();
        let br = best_response(&traffic(100.0, 0.1), 1e6, 10, Some(&cfg)).unwrap();
        assert!(br.strategy.scheme.is_coded());
        assert!((to_db(br.strategy.target_sir) - 8.1).abs() < 0.05);
        let plain = utility_factor(&ModScheme::uncoded(2).unwrap(), PKT, br.strategy.target_sir).unwrap();
        assert!(br.utility_factor > plain);
    }
}
