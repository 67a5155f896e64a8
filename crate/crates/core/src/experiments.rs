//! Drivers for the optimum tables, the delay sweep and the energy/spectral
//! tradeoff. Everything here is normalized to unit bandwidth: delay is in
//! units of `1/B`, power in units of `1/h_hat`, utility in units of `B h_hat`
//! and throughput in units of `B`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{best_response, user_size, BestResponse, Regime};
use crate::optimizer::gamma_star;
use crate::phy::{ModScheme, PacketConfig, TcmConfig};
use crate::queueing::TrafficQos;
use crate::scalar::{to_db, Scalar};

pub const TABLE_BITS: [u32; 5] = [2, 4, 6, 8, 10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct TableRow<T> {
    pub bits: u32,
    pub alpha: T,
    pub beta: T,
    pub gamma_star_db: T,
    pub f_star: T,
    pub bits_over_gamma_db: T,
    pub utility_factor: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coded: Option<CodedCells<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CodedCells<T> {
    pub gamma_star_db: T,
    pub f_star: T,
    pub utility_factor: T,
}

/// Optimum SIR, success probability and utility factor for each table
/// constellation, optionally with the coded counterparts.
pub fn optimum_table<T: Scalar>(pkt: PacketConfig, coding: Option<&TcmConfig<T>>) -> Result<Vec<TableRow<T>>> {
    TABLE_BITS
        .iter()
        .map(|&b| {
            let scheme = ModScheme::<T>::uncoded(b)?;
            let opt = gamma_star(&scheme, pkt)?;
            let coded = coding
                .map(|cfg| {
                    let c = gamma_star(&cfg.scheme(b)?, pkt)?;
                    Ok::<_, Error>(CodedCells {
                        gamma_star_db: to_db(c.gamma_star),
                        f_star: c.f_at_star,
                        utility_factor: c.utility_factor,
                    })
                })
                .transpose()?;
            Ok(TableRow {
                bits: b,
                alpha: scheme.alpha(),
                beta: scheme.beta(),
                gamma_star_db: to_db(opt.gamma_star),
                f_star: opt.f_at_star,
                bits_over_gamma_db: to_db(T::count(b) / opt.gamma_star),
                utility_factor: opt.utility_factor,
                coded,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Grid of sample points for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    pub fn new(min: f64, max: f64, points: usize, spacing: Spacing) -> Result<Self> {
        let spec = Self { min, max, points, spacing };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::Config(format!("a sweep needs at least 2 points, got {}", self.points)));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!("sweep range [{}, {}] is empty", self.min, self.max)));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            return Err(Error::Config(format!("log sweep needs min > 0, got {}", self.min)));
        }
        Ok(())
    }

    /// Ascending sample points; both ends are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    return self.max;
                }
                let t = i as f64 / n as f64;
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + t * (self.max / self.min).ln()).exp(),
                }
            })
            .collect()
    }
}

/// Normalized-delay sweep for a single user with source rate `load * B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySweep {
    pub pkt: PacketConfig,
    /// `lambda L / B`.
    pub load: f64,
    pub b_max: u32,
    /// Range of `D B`.
    pub delays: SweepSpec,
}

impl Default for DelaySweep {
    fn default() -> Self {
        Self {
            pkt: PacketConfig::DEFAULT,
            load: 0.01,
            b_max: crate::game::DEFAULT_B_MAX,
            delays: SweepSpec { min: 17.0, max: 1000.0, points: 400, spacing: Spacing::Log },
        }
    }
}

/// Single-user operating point in normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct OperatingPoint<T> {
    pub bits: u32,
    pub regime: Regime,
    /// `R_s / B`.
    pub symbol_rate: T,
    pub target_sir_db: T,
    /// `b R_s / B`.
    pub throughput: T,
    /// `p h_hat`.
    pub power: T,
    /// `u / (B h_hat)`.
    pub utility: T,
    pub size: T,
}

impl<T: Scalar> OperatingPoint<T> {
    fn from_response(br: &BestResponse<T>) -> Self {
        let s = &br.strategy;
        let b = T::count(s.scheme.bits());
        let size = user_size(s, T::one());
        Self {
            bits: s.scheme.bits(),
            regime: br.regime,
            symbol_rate: s.symbol_rate,
            target_sir_db: to_db(s.target_sir),
            throughput: b * s.symbol_rate,
            power: s.symbol_rate * s.target_sir,
            utility: br.utility_factor,
            size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct DelayRow<T> {
    pub norm_delay: T,
    /// `None` when no constellation up to `b_max` meets the delay.
    pub uncoded: Option<OperatingPoint<T>>,
    pub coded: Option<OperatingPoint<T>>,
    /// Coded over uncoded utility, in dB.
    pub tcm_gain_db: Option<T>,
}

/// Best response at every delay of the sweep. Points are evaluated in
/// parallel and returned in sweep order.
pub fn delay_sweep<T: Scalar>(cfg: &DelaySweep, coding: Option<&TcmConfig<T>>) -> Result<Vec<DelayRow<T>>> {
    cfg.delays.validate()?;
    if !(cfg.load > 0.0) || !cfg.load.is_finite() {
        return Err(Error::Config(format!("load must be finite and > 0, got {}", cfg.load)));
    }
    crate::phy::check_bits(cfg.b_max)?;
    let lambda = T::lit(cfg.load / f64::from(cfg.pkt.bits()));
    let point = |traffic: &TrafficQos<T>, coding: Option<&TcmConfig<T>>| -> Result<Option<OperatingPoint<T>>> {
        match best_response(traffic, T::one(), cfg.b_max, coding) {
            Ok(br) => Ok(Some(OperatingPoint::from_response(&br))),
            Err(Error::QosInfeasible { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    cfg.delays
        .values()
        .into_par_iter()
        .map(|x| {
            let d = T::lit(x);
            let traffic = TrafficQos::new(lambda, cfg.pkt, d)?;
            let uncoded = point(&traffic, None)?;
            let coded = coding.map(|c| point(&traffic, Some(c))).transpose()?.flatten();
            let tcm_gain_db = match (&uncoded, &coded) {
                (Some(u), Some(c)) => Some(to_db(c.utility / u.utility)),
                _ => None,
            };
            Ok(DelayRow { norm_delay: d, uncoded, coded, tcm_gain_db })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct TradeoffRow<T> {
    pub bits: u32,
    pub coded: bool,
    /// `b R_s / B`.
    pub spectral_eff: T,
    /// `b f(gamma*) / gamma*`.
    pub energy_factor: T,
}

/// Energy factor against spectral efficiency at a fixed `R_s / B`, uncoded
/// rows first, then coded rows when a table is given.
pub fn tradeoff<T: Scalar>(
    pkt: PacketConfig,
    symbol_rate: T,
    coding: Option<&TcmConfig<T>>,
) -> Result<Vec<TradeoffRow<T>>> {
    if !(symbol_rate > T::zero()) || symbol_rate > T::one() {
        return Err(Error::Config(format!("normalized symbol rate must lie in (0, 1], got {symbol_rate}")));
    }
    let mut rows = Vec::new();
    for coded in [false, true] {
        if coded && coding.is_none() {
            break;
        }
        for &b in &TABLE_BITS {
            let scheme = if coded { coding.unwrap().scheme(b)? } else { ModScheme::uncoded(b)? };
            let opt = gamma_star(&scheme, pkt)?;
            rows.push(TradeoffRow {
                bits: b,
                coded,
                spectral_eff: T::count(b) * symbol_rate,
                energy_factor: opt.utility_factor,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points() {
        let s = SweepSpec::new(1.0, 100.0, 3, Spacing::Log).unwrap();
        let v = s.values();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(v[2], 100.0);
        let l = SweepSpec::new(0.0, 1.0, 5, Spacing::Linear).unwrap().values();
        assert_eq!(l, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(SweepSpec::new(1.0, 1.0, 5, Spacing::Linear).is_err());
        assert!(SweepSpec::new(0.0, 1.0, 5, Spacing::Log).is_err());
        assert!(SweepSpec::new(1.0, 2.0, 1, Spacing::Log).is_err());
    }

    #[test]
    fn table_rows() {
        let rows = optimum_table::<f64>(PacketConfig::DEFAULT, None).unwrap();
        assert_eq!(rows.len(), 5);
        let r = &rows[3];
        assert_eq!(r.bits, 8);
        assert!((r.alpha - 1.875).abs() < 1e-12);
        assert!((r.beta - 3.0 / 255.0).abs() < 1e-15);
        assert!((r.gamma_star_db - 27.3).abs() < 0.05);
        assert!((r.bits_over_gamma_db + 18.3).abs() < 0.05);
        assert!(r.coded.is_none());
    }

    #[test]
    fn coded_table_needs_every_entry() {
        let partial = TcmConfig::<f64>::from_entries(&TcmConfig::<f64>::default_trellis().entries()[..2]).unwrap();
        assert!(matches!(optimum_table(PacketConfig::DEFAULT, Some(&partial)), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_flags_infeasible_rows() {
        let cfg = DelaySweep {
            delays: SweepSpec { min: 5.0, max: 1000.0, points: 20, spacing: Spacing::Log },
            ..DelaySweep::default()
        };
        let rows = delay_sweep::<f64>(&cfg, None).unwrap();
        assert!(rows[0].uncoded.is_none());
        let last = rows.last().unwrap().uncoded.unwrap();
        assert_eq!(last.bits, 2);
        assert_eq!(last.regime, Regime::Optimum);
        assert!((last.utility - 0.1978).abs() < 5e-4);
        assert!((last.power - last.size / (1.0 - last.size)).abs() < 1e-12);
        assert!(rows.iter().all(|r| r.tcm_gain_db.is_none()));
    }

    #[test]
    fn tradeoff_rows() {
        let rows = tradeoff(PacketConfig::DEFAULT, 0.01, Some(&TcmConfig::<f64>::default_trellis())).unwrap();
        assert_eq!(rows.len(), 10);
        assert!((rows[0].spectral_eff - 0.02).abs() < 1e-15);
        assert!((rows[4].spectral_eff - 0.10).abs() < 1e-15);
        assert!((rows[4].energy_factor - 0.0037).abs() < 5e-5);
        assert!(tradeoff::<f64>(PacketConfig::DEFAULT, 0.0, None).is_err());
        assert_eq!(tradeoff::<f64>(PacketConfig::DEFAULT, 0.01, None).unwrap().len(), 5);
    }
}
