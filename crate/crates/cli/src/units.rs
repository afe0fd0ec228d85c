//! Angles with explicit unit suffixes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleUnit {
    Rad,
    Deg,
    Arcsec,
}

impl AngleUnit {
    /// Radians per unit.
    pub fn factor(self) -> f64 {
        match self {
            Self::Rad => 1.0,
            Self::Deg => PI / 180.0,
            Self::Arcsec => PI / 648_000.0,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Self::Rad => "rad",
            Self::Deg => "deg",
            Self::Arcsec => "arcsec",
        }
    }
}

pub fn to_rad(value: f64, unit: AngleUnit) -> f64 {
    value * unit.factor()
}

pub fn from_rad(rad: f64, unit: AngleUnit) -> f64 {
    rad / unit.factor()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid angle {input:?}: {reason}")]
pub struct AngleParseError {
    pub input: String,
    pub reason: String,
}

/// Angle stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Angle(pub f64);

impl Angle {
    pub fn rad(self) -> f64 {
        self.0
    }

    pub fn deg(self) -> f64 {
        from_rad(self.0, AngleUnit::Deg)
    }

    pub fn arcsec(self) -> f64 {
        from_rad(self.0, AngleUnit::Arcsec)
    }
}

impl FromStr for Angle {
    type Err = AngleParseError;

    /// Accepts `"<number>"` (radians) or `"<number> <unit>"` with unit
    /// `rad`, `deg` or `arcsec`; the space is optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| AngleParseError { input: s.to_string(), reason: reason.to_string() };
        let t = s.trim();
        let (num, unit) = [AngleUnit::Arcsec, AngleUnit::Rad, AngleUnit::Deg]
            .iter()
            .find_map(|&u| t.strip_suffix(u.suffix()).map(|rest| (rest.trim_end(), u)))
            .unwrap_or((t, AngleUnit::Rad));
        if num.is_empty() {
            return Err(err("missing number"));
        }
        let v: f64 = num.parse().map_err(|_| err("not a number"))?;
        if !v.is_finite() {
            return Err(err("not finite"));
        }
        let rad = to_rad(v, unit);
        if !rad.is_finite() {
            return Err(err("overflows in radians"));
        }
        Ok(Angle(rad))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} rad", self.0)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Angle;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle such as \"0.025 deg\", \"90 arcsec\" or a number of radians")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Angle, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Angle, E> {
                if v.is_finite() {
                    Ok(Angle(v))
                } else {
                    Err(E::custom("angle must be finite"))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}
