use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DEFAULT_B_MAX;
use crate::error::{Error, Result};
use crate::phy::{check_bits, PacketConfig, TcmConfig};
use crate::queueing::TrafficQos;
use crate::scalar::Scalar;

/// One terminal: its channel gain to the access point and its traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserSpec<T> {
    pub gain: T,
    pub traffic: TrafficQos<T>,
}

/// Uplink CDMA cell with a matched-filter receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScene<T> {
    /// Spreading bandwidth `B` (Hz).
    pub bandwidth: T,
    /// Background noise power `sigma^2` (W).
    pub noise_power: T,
    pub users: Vec<UserSpec<T>>,
    pub b_max: u32,
    /// Transmit power ceiling; only reported on, never enforced.
    pub p_max: Option<T>,
    /// TCM table when every user runs trellis-coded modulation.
    pub coding: Option<TcmConfig<T>>,
}

impl<T: Scalar> NetworkScene<T> {
    pub fn new(bandwidth: T, noise_power: T, users: Vec<UserSpec<T>>) -> Result<Self> {
        let scene = Self { bandwidth, noise_power, users, b_max: DEFAULT_B_MAX, p_max: None, coding: None };
        scene.validate()?;
        Ok(scene)
    }

    pub fn with_b_max(mut self, b_max: u32) -> Result<Self> {
        self.b_max = b_max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_coding(mut self, coding: Option<TcmConfig<T>>) -> Self {
        self.coding = coding;
        self
    }

    pub fn with_p_max(mut self, p_max: Option<T>) -> Result<Self> {
        self.p_max = p_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.bandwidth) {
            return Err(Error::Config(format!("bandwidth must be finite and > 0, got {}", self.bandwidth)));
        }
        if !positive(self.noise_power) {
            return Err(Error::Config(format!("noise power must be finite and > 0, got {}", self.noise_power)));
        }
        check_bits(self.b_max)?;
        if self.users.is_empty() {
            return Err(Error::Config("scene has no users".into()));
        }
        if let Some(p) = self.p_max {
            if !positive(p) {
                return Err(Error::Config(format!("power ceiling must be finite and > 0, got {p}")));
            }
        }
        for (k, u) in self.users.iter().enumerate() {
            if !positive(u.gain) {
                return Err(Error::Config(format!("user {k}: gain must be finite and > 0, got {}", u.gain)));
            }
        }
        Ok(())
    }

    /// Users' scaled gains `h_k / sigma^2`.
    pub fn normalized_gains(&self) -> Vec<T> {
        self.users.iter().map(|u| u.gain / self.noise_power).collect()
    }

    pub fn from_file(file: &SceneFile, gain_table: Option<TcmConfig<T>>) -> Result<Self> {
        let users = file
            .users
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let pkt = PacketConfig::new(u.packet_bits).map_err(|e| Error::Config(format!("user {k}: {e}")))?;
                let traffic = TrafficQos::new(T::lit(u.lambda_pps), pkt, T::lit(u.delay_s))
                    .map_err(|e| Error::Config(format!("user {k}: {e}")))?;
                Ok(UserSpec { gain: T::lit(u.gain), traffic })
            })
            .collect::<Result<Vec<_>>>()?;
        let coding = file.coded.then(|| gain_table.unwrap_or_else(TcmConfig::default_trellis));
        let scene = Self {
            bandwidth: T::lit(file.bandwidth_hz),
            noise_power: T::lit(file.noise_w),
            users,
            b_max: file.b_max,
            p_max: file.p_max_w.map(T::lit),
            coding,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>, gain_table: Option<TcmConfig<T>>) -> Result<Self> {
        Self::from_file(&SceneFile::load(path)?, gain_table)
    }
}

/// On-disk scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub users: Vec<UserFile>,
    #[serde(default = "default_b_max")]
    pub b_max: u32,
    #[serde(default)]
    pub coded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max_w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserFile {
    pub gain: f64,
    pub lambda_pps: f64,
    #[serde(default = "default_packet_bits")]
    pub packet_bits: u32,
    pub delay_s: f64,
}

fn default_b_max() -> u32 {
    DEFAULT_B_MAX
}

fn default_packet_bits() -> u32 {
    PacketConfig::DEFAULT_BITS
}

impl SceneFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("scene file: {e}")))
    }
}
