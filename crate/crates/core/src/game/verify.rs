use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{EquilibriumReport, NetworkScene};
use crate::error::{Error, Result};
use crate::phy::{Efficiency, ModScheme};
use crate::queueing::{avg_delay, LinkRate};
use crate::scalar::Scalar;

/// Largest relative utility gain a unilateral deviation may achieve.
pub const DEVIATION_TOLERANCE: f64 = 1e-6;

/// Lower end of the sampled symbol rates, as a fraction of the bandwidth.
const MIN_RATE_FRACTION: f64 = 1e-4;
/// Spread of the sampled powers, in decades either side of the equilibrium.
const POWER_DECADES: f64 = 2.0;
/// Spread of the local samples, in decades.
const LOCAL_DECADES: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    /// Best relative gain per user over delay-compliant deviations.
    pub max_relative_gain: Vec<f64>,
    /// Deviations per user that met the delay bound.
    pub admissible: Vec<usize>,
    /// Deviations per user that broke it and were discarded.
    pub delay_violations: Vec<usize>,
    pub samples_per_user: usize,
}

/// Samples unilateral deviations `(b, R_s, p)` for every user with the others
/// held at their equilibrium powers, and checks that none that meets the
/// delay bound improves utility by more than [`DEVIATION_TOLERANCE`].
///
/// The first sample is the equilibrium strategy itself. Of the rest, half are global (any `b`, `R_s` log-uniform over four
/// decades below `B`, `p` within two decades of the equilibrium), the rest
/// are small perturbations of the equilibrium strategy. Each user draws from
/// its own stream of `seed`, so the verdict does not depend on thread count.
pub fn verify_equilibrium<T: Scalar>(
    scene: &NetworkScene<T>,
    report: &EquilibriumReport<T>,
    n_samples: usize,
    seed: u64,
) -> Result<Verdict> {
    let powers =
        report.powers().ok_or_else(|| Error::Domain("infeasible equilibrium has no powers to verify".into()))?;
    if report.users.len() != scene.users.len() {
        return Err(Error::Domain("report does not belong to this scene".into()));
    }
    let bits: Vec<u32> =
        (2..=scene.b_max).step_by(2).filter(|&b| scene.coding.as_ref().is_none_or(|c| c.code(b).is_ok())).collect();
    let per_user = (0..scene.users.len())
        .into_par_iter()
        .map(|k| probe_user(scene, report, &powers, &bits, k, n_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let max_relative_gain: Vec<f64> = per_user.iter().map(|r| r.0).collect();
    Ok(Verdict {
        passed: max_relative_gain.iter().all(|&g| g <= DEVIATION_TOLERANCE),
        max_relative_gain,
        admissible: per_user.iter().map(|r| r.1).collect(),
        delay_violations: per_user.iter().map(|r| n_samples - r.1).collect(),
        samples_per_user: n_samples,
    })
}

fn probe_user<T: Scalar>(
    scene: &NetworkScene<T>,
    report: &EquilibriumReport<T>,
    powers: &[T],
    bits: &[u32],
    k: usize,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let user = &scene.users[k];
    let eq = &report.users[k].strategy;
    let p_eq = powers[k].to_f64_lossy();
    let bw = scene.bandwidth.to_f64_lossy();
    let u_eq =
        utility(T::count(eq.scheme.bits()), eq.symbol_rate, eq.target_sir, powers[k], &eq.scheme, user.traffic.pkt);
    let u_eq = u_eq.to_f64_lossy();

    let interference = scene
        .users
        .iter()
        .zip(powers)
        .enumerate()
        .filter(|&(j, _)| j != k)
        .fold(scene.noise_power, |acc, (_, (u, &p))| acc + u.gain * p);
    let h_eff = user.gain / interference;

    let mut best = f64::NEG_INFINITY;
    let mut admissible = 0;
    for i in 0..n_samples {
        let (scheme, rs, p) = if i == 0 {
            (eq.scheme, eq.symbol_rate.to_f64_lossy(), p_eq)
        } else if i % 2 == 0 {
            let b = bits[rng.gen_range(0..bits.len())];
            let rs = bw * 10f64.powf(rng.gen_range(MIN_RATE_FRACTION.log10()..=0.0));
            let p = p_eq * 10f64.powf(rng.gen_range(-POWER_DECADES..=POWER_DECADES));
            (ModScheme::with_coding(b, scene.coding.as_ref())?, rs, p)
        } else {
            let rs =
                (eq.symbol_rate.to_f64_lossy() * 10f64.powf(rng.gen_range(-LOCAL_DECADES..=LOCAL_DECADES))).min(bw);
            let p = p_eq * 10f64.powf(rng.gen_range(-LOCAL_DECADES..=LOCAL_DECADES));
            (eq.scheme, rs, p)
        };
        let (rs, p) = (T::lit(rs), T::lit(p));
        let gamma = scene.bandwidth / rs * p * h_eff;
        let link = LinkRate::new(scheme, rs)?;
        let meets_delay = matches!(avg_delay(&link, &user.traffic, gamma),
            Ok(w) if w <= user.traffic.delay_bound * T::lit(1.0 + 1e-9));
        if !meets_delay {
            continue;
        }
        admissible += 1;
        let u = utility(T::count(scheme.bits()), rs, gamma, p, &scheme, user.traffic.pkt).to_f64_lossy();
        best = best.max((u - u_eq) / u_eq);
    }
    Ok((best, admissible))
}

fn utility<T: Scalar>(b: T, rs: T, gamma: T, p: T, scheme: &ModScheme<T>, pkt: crate::phy::PacketConfig) -> T {
    b * rs * Efficiency::new(scheme, pkt).value_unchecked(gamma) / p
}
