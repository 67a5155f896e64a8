use serde::Serialize;

use super::{best_response_with, user_size, NetworkScene, RatePolicy, Regime, Strategy};
use crate::error::{Error, Result};
use crate::phy::{Efficiency, PacketConfig};
use crate::scalar::Scalar;

/// Equilibrium state of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct UserOutcome<T> {
    pub strategy: Strategy<T>,
    pub regime: Regime,
    pub rate_interval: (T, T),
    /// Resource share `Phi_k`.
    pub size: T,
    /// Bits per joule; absent when the cell is overloaded.
    pub utility: Option<T>,
    /// True when the power exceeds the scene's ceiling.
    pub exceeds_p_max: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct EquilibriumReport<T> {
    pub users: Vec<UserOutcome<T>>,
    pub total_size: T,
    /// `sum Phi < 1`: finite powers exist.
    pub feasible: bool,
}

impl<T: Scalar> EquilibriumReport<T> {
    pub fn powers(&self) -> Option<Vec<T>> {
        self.users.iter().map(|u| u.strategy.power).collect()
    }

    pub fn utilities(&self) -> Option<Vec<T>> {
        self.users.iter().map(|u| u.utility).collect()
    }

    pub fn power_violations(&self) -> Vec<usize> {
        self.users.iter().enumerate().filter(|(_, u)| u.exceeds_p_max).map(|(k, _)| k).collect()
    }
}

/// Powers that give every user exactly its target SIR at the matched-filter
/// output, `p_k = (sigma^2 / h_k) Phi_k / (1 - sum Phi)`. `None` if `sum Phi >= 1`.
pub fn matched_filter_powers<T: Scalar>(sizes: &[T], gains: &[T], noise_power: T) -> Option<Vec<T>> {
    let total = sizes.iter().fold(T::zero(), |a, &s| a + s);
    let slack = T::one() - total;
    if !(slack > T::zero()) {
        return None;
    }
    Some(sizes.iter().zip(gains).map(|(&phi, &h)| noise_power / h * phi / slack).collect())
}

/// Output SIR of user `k` for arbitrary powers and symbol rates.
pub fn matched_filter_sir<T: Scalar>(
    bandwidth: T,
    noise_power: T,
    gains: &[T],
    symbol_rates: &[T],
    powers: &[T],
    k: usize,
) -> T {
    let interference = gains
        .iter()
        .zip(powers)
        .enumerate()
        .filter(|&(j, _)| j != k)
        .fold(noise_power, |acc, (_, (&h, &p))| acc + h * p);
    bandwidth / symbol_rates[k] * powers[k] * gains[k] / interference
}

pub fn nash_equilibrium<T: Scalar>(scene: &NetworkScene<T>) -> Result<EquilibriumReport<T>> {
    nash_equilibrium_with(scene, RatePolicy::ParetoDominant)
}

/// Nash equilibrium of the non-cooperative game. An overloaded cell
/// (`sum Phi >= 1`) yields a report with `feasible == false`, not an error.
pub fn nash_equilibrium_with<T: Scalar>(scene: &NetworkScene<T>, policy: RatePolicy) -> Result<EquilibriumReport<T>> {
    scene.validate()?;
    let bw = scene.bandwidth;
    let responses = scene
        .users
        .iter()
        .map(|u| best_response_with(&u.traffic, bw, scene.b_max, scene.coding.as_ref(), policy))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<T> = responses.iter().map(|r| user_size(&r.strategy, bw)).collect();
    let total_size = sizes.iter().fold(T::zero(), |a, &s| a + s);
    let gains: Vec<T> = scene.users.iter().map(|u| u.gain).collect();
    let powers = matched_filter_powers(&sizes, &gains, scene.noise_power);

    let mut users: Vec<UserOutcome<T>> = responses
        .iter()
        .zip(&sizes)
        .enumerate()
        .map(|(k, (r, &size))| {
            let power = powers.as_ref().map(|p| p[k]);
            UserOutcome {
                strategy: Strategy { power, ..r.strategy },
                regime: r.regime,
                rate_interval: r.rate_interval,
                size,
                utility: None,
                exceeds_p_max: matches!((power, scene.p_max), (Some(p), Some(cap)) if p > cap),
            }
        })
        .collect();
    let mut report = EquilibriumReport { feasible: powers.is_some(), users: Vec::new(), total_size };
    if report.feasible {
        report.users = users.clone();
        let u = equilibrium_utility(scene, &report)?;
        for (o, v) in users.iter_mut().zip(u) {
            o.utility = Some(v);
        }
    }
    report.users = users;
    Ok(report)
}

fn success<T: Scalar>(strategy: &Strategy<T>, pkt: PacketConfig) -> Result<T> {
    Efficiency::new(&strategy.scheme, pkt).value(strategy.target_sir)
}

/// Closed-form equilibrium utilities
/// `b B f h / (sigma^2 gamma) * (1 - sum_{j != k} Phi_j / (1 - Phi_k))`.
pub fn equilibrium_utility<T: Scalar>(scene: &NetworkScene<T>, report: &EquilibriumReport<T>) -> Result<Vec<T>> {
    if !report.feasible {
        return Err(Error::Domain("no finite-power equilibrium: total size >= 1".into()));
    }
    let total = report.total_size;
    scene
        .users
        .iter()
        .zip(&report.users)
        .map(|(u, o)| {
            let s = &o.strategy;
            let f = success(s, u.traffic.pkt)?;
            let b = T::count(s.scheme.bits());
            let others = total - o.size;
            Ok(b * scene.bandwidth * f * u.gain / (scene.noise_power * s.target_sir)
                * (T::one() - others / (T::one() - o.size)))
        })
        .collect()
}

/// Utilities `b R_s f(gamma) / p` with `gamma` measured at the receiver for
/// the report's powers.
pub fn direct_utilities<T: Scalar>(scene: &NetworkScene<T>, report: &EquilibriumReport<T>) -> Result<Vec<T>> {
    let powers = report.powers().ok_or_else(|| Error::Domain("report carries no powers".into()))?;
    let gains: Vec<T> = scene.users.iter().map(|u| u.gain).collect();
    let rates: Vec<T> = report.users.iter().map(|o| o.strategy.symbol_rate).collect();
    (0..powers.len())
        .map(|k| {
            let gamma = matched_filter_sir(scene.bandwidth, scene.noise_power, &gains, &rates, &powers, k);
            let s = &report.users[k].strategy;
            let f = Efficiency::new(&s.scheme, scene.users[k].traffic.pkt).value(gamma)?;
            Ok(T::count(s.scheme.bits()) * s.symbol_rate * f / powers[k])
        })
        .collect()
}
