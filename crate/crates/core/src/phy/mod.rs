//! Square M-QAM link model: constellation constants, the packet efficiency
//! function and its derivative, and the trellis-coded variant.

mod gaussian;
mod tcm;

pub use gaussian::{normal_pdf, q_tail, q_tail_inv};
pub use tcm::{fit_coding_gain, GainEntry, GainFit, GainParams, TcmCode, TcmConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest bits-per-symbol accepted; keeps `2^b` exact in every scalar type.
pub const MAX_BITS: u32 = 62;

/// Packet length in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PacketConfig {
    bits: u32,
}

impl PacketConfig {
    pub const DEFAULT_BITS: u32 = 100;
    pub const DEFAULT: Self = Self { bits: Self::DEFAULT_BITS };

    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 {
            return Err(Error::Config("packet length must be at least one bit".into()));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Success probability of a blind guess, `2^-L`.
    pub fn guess_floor<T: Scalar>(&self) -> T {
        T::lit(2.0).powi(-(self.bits.min(i32::MAX as u32) as i32))
    }

    /// Supremum of the efficiency function, `1 - 2^-L`.
    pub fn ceiling<T: Scalar>(&self) -> T {
        T::one() - self.guess_floor::<T>()
    }
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// A square constellation (`b` even) with optional trellis coding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModScheme<T> {
    bits: u32,
    coding: Option<TcmCode<T>>,
}

pub(crate) fn check_bits(bits: u32) -> Result<()> {
    if bits < 2 || !bits.is_multiple_of(2) {
        return Err(Error::Config(format!("bits per symbol must be an even integer >= 2 (square M-QAM), got {bits}")));
    }
    if bits > MAX_BITS {
        return Err(Error::Config(format!("bits per symbol {bits} exceeds {MAX_BITS}")));
    }
    Ok(())
}

impl<T: Scalar> ModScheme<T> {
    pub fn uncoded(bits: u32) -> Result<Self> {
        check_bits(bits)?;
        Ok(Self { bits, coding: None })
    }

    pub fn coded(bits: u32, code: TcmCode<T>) -> Result<Self> {
        check_bits(bits)?;
        Ok(Self { bits, coding: Some(code) })
    }

    /// Builds the scheme for `bits`, coded when a TCM table is supplied.
    pub fn with_coding(bits: u32, coding: Option<&TcmConfig<T>>) -> Result<Self> {
        match coding {
            None => Self::uncoded(bits),
            Some(cfg) => cfg.scheme(bits),
        }
    }

    /// Information bits per symbol.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn coding(&self) -> Option<&TcmCode<T>> {
        self.coding.as_ref()
    }

    pub fn is_coded(&self) -> bool {
        self.coding.is_some()
    }

    /// Constellation size `M = 2^b`.
    pub fn constellation_size(&self) -> T {
        T::lit(2.0).powi(self.bits as i32)
    }

    /// `alpha_b = 2 (1 - 2^(-b/2))`
    pub fn alpha(&self) -> T {
        T::lit(2.0) * (T::one() - T::lit(2.0).powi(-((self.bits / 2) as i32)))
    }

    /// `beta_b = 3 / (2^b - 1)`
    pub fn beta(&self) -> T {
        T::lit(3.0) / (self.constellation_size() - T::one())
    }
}

/// The efficiency function `f_b(gamma)` for one (scheme, packet) pair,
/// with the per-scheme constants precomputed.
///
/// Uncoded: `(1 - alpha Q(sqrt(beta gamma)))^(2L/b) - 2^-L`.
/// Coded: the same law evaluated at the effective SIR `gamma * G_b(gamma)`.
#[derive(Debug, Clone, Copy)]
pub struct Efficiency<T> {
    scheme: ModScheme<T>,
    pkt: PacketConfig,
    alpha: T,
    beta: T,
    exponent: T,
    floor: T,
}

impl<T: Scalar> Efficiency<T> {
    pub fn new(scheme: &ModScheme<T>, pkt: PacketConfig) -> Self {
        Self {
            scheme: *scheme,
            pkt,
            alpha: scheme.alpha(),
            beta: scheme.beta(),
            exponent: T::count(2 * pkt.bits()) / T::count(scheme.bits()),
            floor: pkt.guess_floor(),
        }
    }

    pub fn scheme(&self) -> &ModScheme<T> {
        &self.scheme
    }

    pub fn packet(&self) -> PacketConfig {
        self.pkt
    }

    /// `1 - 2^-L`; never attained at finite SIR.
    pub fn ceiling(&self) -> T {
        T::one() - self.floor
    }

    fn check_gamma(gamma: T) -> Result<()> {
        if !(gamma >= T::zero()) || gamma.is_infinite() {
            return Err(Error::Domain(format!("SIR must be finite and >= 0, got {gamma}")));
        }
        Ok(())
    }

    /// Effective SIR seen by the uncoded law and its derivative in `gamma`.
    fn effective(&self, gamma: T) -> (T, T) {
        match &self.scheme.coding {
            None => (gamma, T::one()),
            Some(code) => {
                let g = &code.gain;
                (gamma * g.value(gamma), g.value(gamma) + gamma * g.slope(gamma))
            }
        }
    }

    fn uncoded_value(&self, h: T) -> T {
        if h == T::zero() {
            return T::zero();
        }
        let q = q_tail((self.beta * h).sqrt());
        let p = (self.exponent * (-(self.alpha * q)).ln_1p()).exp();
        (p - self.floor).max(T::zero())
    }

    fn uncoded_slope(&self, h: T) -> T {
        let x = (self.beta * h).sqrt();
        let q = q_tail(x);
        let base_pow = ((self.exponent - T::one()) * (-(self.alpha * q)).ln_1p()).exp();
        // d/dh Q(sqrt(beta h)) = -phi(x) * beta / (2 x)
        self.exponent * base_pow * self.alpha * normal_pdf(x) * self.beta / (T::lit(2.0) * x)
    }

    /// Unchecked evaluation for hot loops; `gamma` must be finite and >= 0.
    #[inline]
    pub fn value_unchecked(&self, gamma: T) -> T {
        let (h, _) = self.effective(gamma);
        self.uncoded_value(h)
    }

    /// Unchecked derivative; `gamma` must be finite and > 0.
    #[inline]
    pub fn slope_unchecked(&self, gamma: T) -> T {
        let (h, dh) = self.effective(gamma);
        self.uncoded_slope(h) * dh
    }

    pub fn value(&self, gamma: T) -> Result<T> {
        Self::check_gamma(gamma)?;
        Ok(self.value_unchecked(gamma))
    }

    pub fn derivative(&self, gamma: T) -> Result<T> {
        Self::check_gamma(gamma)?;
        if gamma == T::zero() {
            return Err(Error::Domain("efficiency derivative is unbounded at zero SIR".into()));
        }
        Ok(self.slope_unchecked(gamma))
    }
}

/// Probability that an `L`-bit packet survives one transmission at SIR `gamma`.
pub fn efficiency<T: Scalar>(scheme: &ModScheme<T>, pkt: PacketConfig, gamma: T) -> Result<T> {
    Efficiency::new(scheme, pkt).value(gamma)
}

/// `d f / d gamma`, analytic for both the uncoded and coded laws.
pub fn efficiency_derivative<T: Scalar>(scheme: &ModScheme<T>, pkt: PacketConfig, gamma: T) -> Result<T> {
    Efficiency::new(scheme, pkt).derivative(gamma)
}
