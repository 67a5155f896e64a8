//! Trellis-coded modulation: the arctangent coding-gain model
//! `G_b(gamma) = A + C atan((gamma - gamma_bar) / D)` and its parameter tables.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_bits, ModScheme};
use crate::error::{Error, Result};
use crate::scalar::{from_db, to_db, Scalar};

/// Shipped parameters for an 8-state rate-2/3 encoder (rate 1/2 for QPSK).
/// Calibrated so that the coded optima land on the published coded operating points.
const DEFAULT_TABLE: &str = include_str!("../../data/tcm_gain_8state.json");

/// Gain-curve constants. `a`, `c` are linear gains; `d`, `gamma_bar` linear SIR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParams<T> {
    pub a: T,
    pub c: T,
    pub d: T,
    pub gamma_bar: T,
}

impl<T: Scalar> GainParams<T> {
    #[inline]
    pub fn value(&self, gamma: T) -> T {
        self.a + self.c * ((gamma - self.gamma_bar) / self.d).atan()
    }

    /// `dG/dgamma`
    #[inline]
    pub fn slope(&self, gamma: T) -> T {
        let u = (gamma - self.gamma_bar) / self.d;
        self.c / (self.d * (T::one() + u * u))
    }

    /// Infimum of the gain over `gamma >= 0`.
    pub fn infimum(&self) -> T {
        let at_zero = self.value(T::zero());
        let at_inf = self.a + self.c * T::FRAC_PI_2();
        at_zero.min(at_inf)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.a, self.c, self.d, self.gamma_bar].iter().all(|v| v.is_finite());
        if !finite || !(self.d > T::zero()) {
            return Err(Error::Config(format!("gain parameters must be finite with D > 0: {self:?}")));
        }
        if !(self.infimum() > T::zero()) {
            return Err(Error::Config(format!(
                "coding gain is not positive for all SIR >= 0 (infimum {})",
                self.infimum()
            )));
        }
        Ok(())
    }
}

/// Coding configuration for one constellation: `n` information bits are
/// convolutionally encoded into `l` bits (code rate `n / l`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcmCode<T> {
    pub info_bits: u32,
    pub coded_bits: u32,
    pub gain: GainParams<T>,
}

impl<T: Scalar> TcmCode<T> {
    pub fn new(bits: u32, info_bits: u32, coded_bits: u32, gain: GainParams<T>) -> Result<Self> {
        if info_bits == 0 || info_bits >= coded_bits {
            return Err(Error::Config(format!("code rate {info_bits}/{coded_bits} must lie in (0, 1)")));
        }
        if info_bits > bits {
            return Err(Error::Config(format!("cannot encode {info_bits} of {bits} information bits")));
        }
        gain.validate()?;
        Ok(Self { info_bits, coded_bits, gain })
    }

    /// Conventional subset-selection code: rate 1/2 for QPSK, 2/3 above.
    pub fn default_rate(bits: u32) -> (u32, u32) {
        if bits == 2 {
            (1, 2)
        } else {
            (2, 3)
        }
    }

    pub fn code_rate(&self) -> T {
        T::count(self.info_bits) / T::count(self.coded_bits)
    }
}

/// One record of a gain file. `D` and `gamma_bar` are in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub b: u32,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d_db: f64,
    pub gamma_bar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_bits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coded_bits: Option<u32>,
}

impl GainEntry {
    pub fn from_params<T: Scalar>(b: u32, p: &GainParams<T>) -> Self {
        Self {
            b,
            a: p.a.to_f64_lossy(),
            c: p.c.to_f64_lossy(),
            d_db: to_db(p.d).to_f64_lossy(),
            gamma_bar: to_db(p.gamma_bar).to_f64_lossy(),
            info_bits: None,
            coded_bits: None,
        }
    }
}

/// Per-constellation TCM parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct TcmConfig<T> {
    codes: BTreeMap<u32, TcmCode<T>>,
}

impl<T: Scalar> TcmConfig<T> {
    pub fn from_entries(entries: &[GainEntry]) -> Result<Self> {
        let mut codes = BTreeMap::new();
        for e in entries {
            check_bits(e.b)?;
            let (dn, dl) = TcmCode::<T>::default_rate(e.b);
            let gain = GainParams {
                a: T::lit(e.a),
                c: T::lit(e.c),
                d: from_db(T::lit(e.d_db)),
                gamma_bar: from_db(T::lit(e.gamma_bar)),
            };
            let code = TcmCode::new(e.b, e.info_bits.unwrap_or(dn), e.coded_bits.unwrap_or(dl), gain)
                .map_err(|err| Error::Config(format!("b = {}: {err}", e.b)))?;
            if codes.insert(e.b, code).is_some() {
                return Err(Error::Config(format!("duplicate gain entry for b = {}", e.b)));
            }
        }
        if codes.is_empty() {
            return Err(Error::Config("gain table is empty".into()));
        }
        Ok(Self { codes })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let entries: Vec<GainEntry> = serde_json::from_str(s)?;
        Self::from_entries(&entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// The shipped 8-state table.
    pub fn default_trellis() -> Self {
        Self::from_json_str(DEFAULT_TABLE).expect("shipped gain table is valid")
    }

    pub fn entries(&self) -> Vec<GainEntry> {
        self.codes
            .iter()
            .map(|(&b, code)| GainEntry {
                info_bits: Some(code.info_bits),
                coded_bits: Some(code.coded_bits),
                ..GainEntry::from_params(b, &code.gain)
            })
            .collect()
    }

    pub fn bits(&self) -> impl Iterator<Item = u32> + '_ {
        self.codes.keys().copied()
    }

    pub fn code(&self, bits: u32) -> Result<&TcmCode<T>> {
        self.codes.get(&bits).ok_or_else(|| Error::Config(format!("no coding-gain parameters for b = {bits}")))
    }

    pub fn scheme(&self, bits: u32) -> Result<ModScheme<T>> {
        ModScheme::coded(bits, *self.code(bits)?)
    }

    /// Coding gain `G_b(gamma)` (linear).
    pub fn coding_gain(&self, bits: u32, gamma: T) -> Result<T> {
        if !(gamma >= T::zero()) {
            return Err(Error::Domain(format!("SIR must be >= 0, got {gamma}")));
        }
        Ok(self.code(bits)?.gain.value(gamma))
    }
}

/// Result of a least-squares fit of the gain model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainFit<T> {
    pub bits: u32,
    pub params: GainParams<T>,
    /// Root-mean-square residual over the samples.
    pub rms: T,
}

/// `D` is fitted through `ln D` to keep it positive.
#[derive(Clone, Copy)]
struct Theta<T>([T; 4]);

impl<T: Scalar> Theta<T> {
    fn params(&self) -> GainParams<T> {
        GainParams { a: self.0[0], c: self.0[1], d: self.0[2].exp(), gamma_bar: self.0[3] }
    }
}

fn ssr<T: Scalar>(p: &GainParams<T>, samples: &[(T, T)]) -> T {
    samples.iter().fold(T::zero(), |acc, &(g, y)| {
        let r = p.value(g) - y;
        acc + r * r
    })
}

/// Best `(A, C)` for fixed `(D, gamma_bar)`; the model is linear in them.
fn linear_part<T: Scalar>(d: T, gamma_bar: T, samples: &[(T, T)]) -> Option<(T, T)> {
    let n = T::from_usize(samples.len())?;
    let (mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &(g, y) in samples {
        let x = ((g - gamma_bar) / d).atan();
        sx = sx + x;
        sy = sy + y;
        sxx = sxx + x * x;
        sxy = sxy + x * y;
    }
    let det = n * sxx - sx * sx;
    if det.abs() <= T::epsilon() * n * sxx {
        return None;
    }
    let c = (n * sxy - sx * sy) / det;
    Some(((sy - c * sx) / n, c))
}

/// Solves the 4x4 system `m x = v` by Gaussian elimination with partial pivoting.
fn solve4<T: Scalar>(mut m: [[T; 4]; 4], mut v: [T; 4]) -> Option<[T; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if !(m[piv][col].abs() > T::zero()) {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..4 {
            let k = m[row][col] / m[col][col];
            for c in col..4 {
                m[row][c] = m[row][c] - k * m[col][c];
            }
            v[row] = v[row] - k * v[col];
        }
    }
    let mut x = [T::zero(); 4];
    for row in (0..4).rev() {
        let tail = (row + 1..4).fold(T::zero(), |acc, c| acc + m[row][c] * x[c]);
        x[row] = (v[row] - tail) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Least-squares fit of `A + C atan((gamma - gamma_bar) / D)` to `(gamma, gain)`
/// samples (both linear). Needs at least four distinct SIR values.
///
/// A coarse search over `(D, gamma_bar)` with the linear part solved exactly
/// seeds a Levenberg-Marquardt refinement of all four parameters.
pub fn fit_coding_gain<T: Scalar>(samples: &[(T, T)], bits: u32) -> Result<GainFit<T>> {
    check_bits(bits)?;
    if samples.iter().any(|(g, y)| !g.is_finite() || !y.is_finite()) {
        return Err(Error::Fit("samples must be finite".into()));
    }
    let mut gammas: Vec<T> = samples.iter().map(|s| s.0).collect();
    gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gammas.dedup();
    if gammas.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 distinct SIR values, got {}", gammas.len())));
    }
    let lo = gammas[0];
    let hi = gammas[gammas.len() - 1];
    let span = hi - lo;

    // seed
    let mut best: Option<(T, Theta<T>)> = None;
    let centres: Vec<T> = (0..=24).map(|k| lo + span * T::count(k) / T::lit(24.0)).collect();
    for &gb in &centres {
        for e in -12..=8 {
            let d = span * T::lit(2.0).powi(e);
            if let Some((a, c)) = linear_part(d, gb, samples) {
                let th = Theta([a, c, d.ln(), gb]);
                let s = ssr(&th.params(), samples);
                if best.is_none_or(|(bs, _)| s < bs) {
                    best = Some((s, th));
                }
            }
        }
    }
    let (mut cost, mut theta) = best.ok_or_else(|| Error::Fit("no usable starting point".into()))?;

    // Levenberg-Marquardt
    let mut mu = T::lit(1e-3);
    let floor = T::epsilon() * T::epsilon();
    for _ in 0..500 {
        let p = theta.params();
        let mut jtj = [[T::zero(); 4]; 4];
        let mut jtr = [T::zero(); 4];
        for &(g, y) in samples {
            let u = (g - p.gamma_bar) / p.d;
            let w = T::one() / (T::one() + u * u);
            let jac = [T::one(), u.atan(), -p.c * u * w, -p.c * w / p.d];
            let r = p.value(g) - y;
            for i in 0..4 {
                jtr[i] = jtr[i] + jac[i] * r;
                for j in 0..4 {
                    jtj[i][j] = jtj[i][j] + jac[i] * jac[j];
                }
            }
        }
        let mut improved = false;
        while mu < T::lit(1e12) {
            let mut m = jtj;
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = row[i] + mu * (jtj[i][i] + floor);
            }
            let Some(step) = solve4(m, jtr.map(|v| -v)) else {
                mu = mu * T::lit(10.0);
                continue;
            };
            let mut cand = theta;
            for i in 0..4 {
                cand.0[i] = cand.0[i] + step[i];
            }
            let c = ssr(&cand.params(), samples);
            if c.is_finite() && c < cost {
                let rel_step = (0..4).fold(T::zero(), |acc, i| acc.max(step[i].abs() / (theta.0[i].abs() + T::one())));
                theta = cand;
                let gain = cost - c;
                cost = c;
                mu = (mu / T::lit(10.0)).max(T::lit(1e-12));
                improved = gain > T::epsilon() * cost && rel_step > T::epsilon();
                break;
            }
            mu = mu * T::lit(10.0);
        }
        if !improved || cost <= floor {
            break;
        }
    }

    let params = theta.params();
    if ![params.a, params.c, params.d, params.gamma_bar].iter().all(|v| v.is_finite()) {
        return Err(Error::Fit(format!("fit diverged: {params:?}")));
    }
    let rms = (ssr(&params, samples) / T::from_usize(samples.len()).unwrap()).sqrt();
    Ok(GainFit { bits, params, rms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gain() -> GainParams<f64> {
        GainParams { a: 1.6, c: 0.25, d: 3.0, gamma_bar: 20.0 }
    }

    #[test]
    fn flat_gain_when_slope_vanishes() {
        let p = GainParams { c: 0.0, ..gain() };
        for g in [0.0, 1.0, 50.0, 1e6] {
            assert_eq!(p.value(g), 1.6);
        }
    }

    #[test]
    fn centre_gives_offset() {
        assert_eq!(gain().value(20.0), 1.6);
    }

    #[test]
    fn shipped_table_is_monotone_and_saturating() {
        let cfg = TcmConfig::<f64>::default_trellis();
        assert_eq!(cfg.bits().collect::<Vec<_>>(), vec![2, 4, 6, 8, 10]);
        for b in cfg.bits() {
            let mut prev = 0.0;
            for k in 0..800 {
                let g = 10f64.powf(k as f64 * 0.01);
                let v = cfg.coding_gain(b, g).unwrap();
                assert!(v >= prev && v > 0.0);
                prev = v;
            }
            let p = cfg.code(b).unwrap().gain;
            let ceiling = p.a + p.c * std::f64::consts::FRAC_PI_2;
            assert!(prev < ceiling && ceiling - prev < 0.1);
        }
        assert_eq!(cfg.code(2).unwrap().code_rate(), 0.5);
        assert!((cfg.code(4).unwrap().code_rate() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn missing_entry_is_config_error() {
        let cfg = TcmConfig::<f64>::default_trellis();
        assert!(matches!(cfg.coding_gain(12, 1.0), Err(Error::Config(_))));
        assert!(matches!(cfg.coding_gain(2, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn file_units_are_db() {
        let json = r#"[{"b": 4, "A": 1.5, "C": 0.2, "D": 10.0, "gamma_bar": 20.0}]"#;
        let cfg = TcmConfig::<f64>::from_json_str(json).unwrap();
        let code = cfg.code(4).unwrap();
        assert!((code.gain.d - 10.0).abs() < 1e-12);
        assert!((code.gain.gamma_bar - 100.0).abs() < 1e-12);
        assert_eq!((code.info_bits, code.coded_bits), (2, 3));
        let back = TcmConfig::<f64>::from_entries(&cfg.entries()).unwrap();
        assert_eq!(back.code(4).unwrap().info_bits, 2);
        assert!((back.code(4).unwrap().gain.d - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_tables() {
        let negative = r#"[{"b": 4, "A": 0.1, "C": 1.0, "D": 0.0, "gamma_bar": 20.0}]"#;
        assert!(matches!(TcmConfig::<f64>::from_json_str(negative), Err(Error::Config(_))));
        let dup =
            r#"[{"b": 4, "A": 1, "C": 0, "D": 0, "gamma_bar": 0}, {"b": 4, "A": 1, "C": 0, "D": 0, "gamma_bar": 0}]"#;
        assert!(TcmConfig::<f64>::from_json_str(dup).is_err());
        let odd = r#"[{"b": 3, "A": 1, "C": 0, "D": 0, "gamma_bar": 0}]"#;
        assert!(TcmConfig::<f64>::from_json_str(odd).is_err());
        let rate = r#"[{"b": 4, "A": 1, "C": 0, "D": 0, "gamma_bar": 0, "info_bits": 3, "coded_bits": 3}]"#;
        assert!(TcmConfig::<f64>::from_json_str(rate).is_err());
        assert!(TcmConfig::<f64>::from_json_str("[]").is_err());
    }

    #[test]
    fn exact_recovery() {
        let truth = gain();
        let samples: Vec<(f64, f64)> = (0..30).map(|k| 5.0 + k as f64 * 1.2).map(|g| (g, truth.value(g))).collect();
        let fit = fit_coding_gain(&samples, 6).unwrap();
        let p = fit.params;
        for (got, want) in [(p.a, truth.a), (p.c, truth.c), (p.d, truth.d), (p.gamma_bar, truth.gamma_bar)] {
            assert!(((got - want) / want).abs() < 1e-6, "{got} vs {want}");
        }
        assert!(fit.rms < 1e-10);
    }

    #[test]
    fn collinear_samples_fit_with_reported_rms() {
        let samples: [(f64, f64); 4] = [(1.0, 1.1), (2.0, 1.2), (3.0, 1.3), (4.0, 1.4)];
        let fit = fit_coding_gain(&samples, 4).unwrap();
        let ss: f64 = samples.iter().map(|&(g, y)| (fit.params.value(g) - y).powi(2)).sum();
        let rms = (ss / 4.0).sqrt();
        assert!((fit.rms - rms).abs() <= 1e-15 + 1e-9 * rms);
        assert!(fit.rms < 1e-3, "rms {}", fit.rms);
    }

    #[test]
    fn degenerate_samples_rejected() {
        let same = [(3.0, 1.0), (3.0, 1.2), (3.0, 1.3), (3.0, 1.4)];
        assert!(matches!(fit_coding_gain(&same, 2), Err(Error::Fit(_))));
        let three = [(1.0, 1.0), (2.0, 1.2), (3.0, 1.3), (3.0, 1.4)];
        assert!(matches!(fit_coding_gain(&three, 2), Err(Error::Fit(_))));
        assert!(fit_coding_gain(&[(1.0, f64::NAN), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)], 2).is_err());
    }
}
