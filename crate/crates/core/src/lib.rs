//! Energy-efficient uplink CDMA with M-QAM under per-user mean-delay
//! constraints: physical-layer efficiency, delay model, non-cooperative
//! power/rate/constellation game, and the experiment drivers built on them.
//!
//! Everything numeric is generic over [`Scalar`] (`f64` or `f32`); the
//! `*F64` aliases below pin the common case.
//!
//! ```
//! use qamgame::game::{nash_equilibrium, verify_equilibrium, NetworkScene, UserSpec};
//! use qamgame::{PacketConfig, TrafficQos};
//!
//! # fn main() -> qamgame::Result<()> {
//! let traffic = TrafficQos::new(100.0, PacketConfig::DEFAULT, 0.1)?;
//! let scene = NetworkScene::new(1e6, 5e-16, vec![UserSpec { gain: 1e-9, traffic }])?;
//! let report = nash_equilibrium(&scene)?;
//! let verdict = verify_equilibrium(&scene, &report, 10_000, 1)?;
//! assert!(verdict.passed);
//! # Ok(())
//! # }
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod game;
pub mod optimizer;
pub mod phy;
pub mod queueing;
pub mod scalar;
mod solve;

pub use error::{Error, Result};
pub use game::{
    best_response, nash_equilibrium, user_size, verify_equilibrium, BestResponse, EquilibriumReport, NetworkScene,
    Regime, Strategy, UserSpec,
};
pub use optimizer::{gamma_star, invert_efficiency, OptimumPoint};
pub use phy::{efficiency, ModScheme, PacketConfig, TcmConfig};
pub use queueing::{avg_delay, omega_star, qos_feasible, simulate_queue, LinkRate, TrafficQos};
pub use scalar::Scalar;

pub type ModSchemeF64 = ModScheme<f64>;
pub type ModSchemeF32 = ModScheme<f32>;
pub type TcmConfigF64 = TcmConfig<f64>;
pub type TcmConfigF32 = TcmConfig<f32>;
pub type TrafficQosF64 = TrafficQos<f64>;
pub type TrafficQosF32 = TrafficQos<f32>;
pub type NetworkSceneF64 = NetworkScene<f64>;
pub type NetworkSceneF32 = NetworkScene<f32>;
pub type EquilibriumReportF64 = EquilibriumReport<f64>;
pub type EquilibriumReportF32 = EquilibriumReport<f32>;
