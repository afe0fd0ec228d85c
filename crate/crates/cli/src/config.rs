//! TOML experiment configuration.

use std::fmt;

use qswitch::metrology::crb;
use qswitch::montecarlo::{CampaignConfig, NoiseModel, OperatingPoint};
use qswitch::optics::DovePrismModel;
use qswitch::switch::OpticsConfig;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::units::Angle;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
}

fn field(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: u32,
    pub l: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_true: Option<Angle>,
    #[serde(default = "default_nu", with = "photon_count")]
    pub nu: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub phi0: Phi0,
    #[serde(default, with = "seed_value")]
    pub seed: u64,
    /// `(m, l)` pairs for the scaling study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_sweep: Option<ThetaSweep>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub dove: DoveConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_nu() -> u64 {
    70_000_000
}

fn default_trials() -> usize {
    60
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSweep {
    pub start: Angle,
    pub end: Angle,
    pub steps: usize,
}

impl ThetaSweep {
    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.start.rad(), self.end.rad());
        let n = self.steps;
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Offset phase: a fixed angle, or `"quadrature"` (`4mlθ + φ₀ = π/2` at the
/// true angle, or at θ = 0 for sweeps).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Phi0 {
    #[default]
    Quadrature,
    Fixed(Angle),
}

impl Phi0 {
    pub fn operating_point(self) -> OperatingPoint {
        match self {
            Self::Quadrature => OperatingPoint::Quadrature,
            Self::Fixed(a) => OperatingPoint::Fixed(a.rad()),
        }
    }
}

impl Serialize for Phi0 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Quadrature => s.serialize_str("quadrature"),
            Self::Fixed(a) => a.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Phi0 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Num(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) if t.trim() == "quadrature" => Ok(Self::Quadrature),
            Raw::Text(t) => t.parse().map(Self::Fixed).map_err(de::Error::custom),
            Raw::Num(v) if v.is_finite() => Ok(Self::Fixed(Angle(v))),
            Raw::Num(_) => Err(de::Error::custom("phi0 must be finite")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub visibility: f64,
    pub rotation_jitter: Angle,
    pub phase_drift: Angle,
    pub efficiency: f64,
    /// When set, the rotation jitter is calibrated so that the quadrature
    /// RMSE sits this factor above the bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_gap: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            visibility: 1.0,
            rotation_jitter: Angle(0.0),
            phase_drift: Angle(0.0),
            efficiency: 1.0,
            target_gap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoveConfig {
    pub delta: Angle,
    pub rho: f64,
    pub alpha0: Angle,
    pub deflection_on: bool,
    pub compensation_on: bool,
}

impl Default for DoveConfig {
    fn default() -> Self {
        let d = DovePrismModel::default();
        Self {
            delta: Angle(d.delta),
            rho: d.rho,
            alpha0: Angle(d.alpha),
            deflection_on: false,
            compensation_on: true,
        }
    }
}

/// OAM amplitudes `[k, re, im]` of the probe; normalized on use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub oam: Vec<(i64, f64, f64)>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { oam: vec![(0, 1.0, 0.0)] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

mod photon_count {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        super::seed_value::serialize(v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = u64;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integral photon count such as 70000000 or 7.16e7")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom("photon count must be non-negative"))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<u64, E> {
                if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 {
                    Ok(v as u64)
                } else {
                    Err(E::custom(format!("photon count {v} is not a non-negative integer")))
                }
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.trim().parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// 64-bit unsigned values beyond the TOML integer range are written as strings.
mod seed_value {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = u64;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an unsigned 64-bit integer")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom("seed must be non-negative"))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.trim().parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the serialized config with the output section reset, as hex.
    pub fn hash(&self) -> String {
        let canonical = Self { output: OutputConfig::default(), ..self.clone() };
        let digest = Sha256::digest(canonical.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let angle_ok = |a: Angle| a.rad().is_finite();
        if self.m == 0 {
            return Err(field("m", "must be a positive integer"));
        }
        if self.l == 0 {
            return Err(field("l", "must be a positive integer"));
        }
        if self.theta_true.is_some() && self.theta_sweep.is_some() {
            return Err(field("theta_true", "theta_true and theta_sweep are mutually exclusive"));
        }
        if let Some(t) = self.theta_true {
            if !(t.rad() > -std::f64::consts::PI && t.rad() < std::f64::consts::PI) {
                return Err(field("theta_true", "must lie in (-pi, pi)"));
            }
        }
        if let Some(s) = self.theta_sweep {
            if !(angle_ok(s.start) && angle_ok(s.end) && s.start.rad() < s.end.rad()) {
                return Err(field("theta_sweep", "start must be below end"));
            }
            let lim = std::f64::consts::PI;
            if s.start.rad() <= -lim || s.end.rad() >= lim {
                return Err(field("theta_sweep", "must lie in (-pi, pi)"));
            }
            if s.steps < 2 {
                return Err(field("theta_sweep", "steps must be at least 2"));
            }
        }
        if self.nu == 0 {
            return Err(field("nu", "must be positive"));
        }
        if self.trials == 0 {
            return Err(field("trials", "must be positive"));
        }
        if let Phi0::Fixed(a) = self.phi0 {
            if !angle_ok(a) {
                return Err(field("phi0", "must be finite"));
            }
        }
        if self.pairs.iter().any(|&(m, l)| m == 0 || l == 0) {
            return Err(field("pairs", "every (m, l) must be positive"));
        }
        self.noise_model_for(self.m, self.l)?;
        let d = self.dove;
        if !(d.rho > 0.0 && d.rho <= 1.0) {
            return Err(field("dove.rho", "must lie in (0, 1]"));
        }
        if !(angle_ok(d.delta) && angle_ok(d.alpha0)) {
            return Err(field("dove", "angles must be finite"));
        }
        if self.probe.oam.is_empty() {
            return Err(field("probe.oam", "needs at least one amplitude"));
        }
        if self.probe.oam.iter().any(|&(k, re, im)| k.abs() > 1 << 20 || !re.is_finite() || !im.is_finite()) {
            return Err(field("probe.oam", "indices must satisfy |k| <= 2^20 and amplitudes be finite"));
        }
        if self.probe.oam.iter().all(|&(_, re, im)| re == 0.0 && im == 0.0) {
            return Err(field("probe.oam", "amplitudes are all zero"));
        }
        Ok(())
    }

    /// Noise model for the pair `(m, l)`; a `target_gap` is calibrated against
    /// that pair's bound.
    pub fn noise_model_for(&self, m: u32, l: u32) -> Result<NoiseModel, ConfigError> {
        let n = self.noise;
        let base = NoiseModel {
            visibility: n.visibility,
            rotation_jitter: n.rotation_jitter.rad(),
            phase_drift: n.phase_drift.rad(),
            efficiency: n.efficiency,
        };
        base.validate().map_err(|e| field("noise", e.to_string()))?;
        let Some(gap) = n.target_gap else { return Ok(base) };
        if base.rotation_jitter != 0.0 {
            return Err(field("noise.target_gap", "cannot be combined with rotation_jitter"));
        }
        let bound = crb(m, l, self.nu as f64).map_err(|e| field("nu", e.to_string()))?;
        base.calibrated_to_gap(gap, bound).map_err(|e| field("noise.target_gap", e.to_string()))
    }

    /// The optical round trip places `m/2` prism pairs in each pass.
    pub fn require_even_m(&self) -> Result<(), ConfigError> {
        if !self.m.is_multiple_of(2) {
            return Err(field("m", format!("{} must be even for the optical round trip", self.m)));
        }
        Ok(())
    }

    pub fn optics(&self) -> OpticsConfig {
        OpticsConfig {
            dove: DovePrismModel {
                alpha: self.dove.alpha0.rad(),
                delta: self.dove.delta.rad(),
                rho: self.dove.rho,
                include_polarization_deflection: self.dove.deflection_on,
            },
            compensation: self.dove.compensation_on,
        }
    }

    /// Campaign at `theta_true` for the configured pair.
    pub fn campaign(&self) -> Result<CampaignConfig, ConfigError> {
        let theta = self.theta_true.ok_or_else(|| field("theta_true", "required by this command"))?;
        Ok(CampaignConfig {
            m: self.m,
            l: self.l,
            theta_true: theta.rad(),
            operating_point: self.phi0.operating_point(),
            nu: self.nu,
            trials: self.trials,
            noise: self.noise_model_for(self.m, self.l)?,
            seed: self.seed,
            workers: None,
        })
    }
}
