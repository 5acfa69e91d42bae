//! Scalar quantities shared across the link and security models.
//!
//! Lengths are stored in metres. Noise variances are in shot-noise units
//! (vacuum quadrature variance = 1).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A level or attenuation in decibels. Positive values are losses.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decibel(pub f64);

impl Decibel {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::ops::Add for Decibel {
    type Output = Decibel;
    fn add(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 + rhs.0)
    }
}

impl fmt::Display for Decibel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dB", self.0)
    }
}

/// Fraction of optical power surviving a channel, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Transmittance(f64);

impl Transmittance {
    pub const UNITY: Transmittance = Transmittance(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Transmittance(value))
        } else {
            Err(Error::param("transmittance", value, "must lie in [0, 1]"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Transmittance {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Transmittance::new(v)
    }
}

impl From<Transmittance> for f64 {
    fn from(t: Transmittance) -> f64 {
        t.0
    }
}

/// A variance in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ShotNoiseUnits(f64);

impl ShotNoiseUnits {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 && value.is_finite() {
            Ok(ShotNoiseUnits(value))
        } else {
            Err(Error::param(
                "variance",
                value,
                "must be finite and >= 0 SNU",
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ShotNoiseUnits {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        ShotNoiseUnits::new(v)
    }
}

impl From<ShotNoiseUnits> for f64 {
    fn from(v: ShotNoiseUnits) -> f64 {
        v.0
    }
}

/// A length, stored in metres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Length(f64);

impl Length {
    pub const fn from_m(m: f64) -> Self {
        Length(m)
    }

    pub const fn from_km(km: f64) -> Self {
        Length(km * 1e3)
    }

    pub const fn from_nm(nm: f64) -> Self {
        Length(nm * 1e-9)
    }

    pub fn m(self) -> f64 {
        self.0
    }

    pub fn km(self) -> f64 {
        self.0 * 1e-3
    }

    pub fn nm(self) -> f64 {
        self.0 * 1e9
    }
}

/// Converts an attenuation to a transmittance, `10^(-a/10)`.
pub fn db_to_transmittance(a: Decibel) -> Result<Transmittance> {
    if a.0 < 0.0 || a.0.is_nan() {
        return Err(Error::NegativeAttenuation(a.0));
    }
    Ok(Transmittance(10f64.powf(-a.0 / 10.0)))
}

/// Converts a transmittance back to an attenuation, `-10 log10(t)`.
pub fn transmittance_to_db(t: Transmittance) -> Result<Decibel> {
    if t.0 <= 0.0 {
        return Err(Error::TotalBlockage(t.0));
    }
    // -0.0 for t = 1 reads badly in output
    Ok(Decibel(-10.0 * t.0.log10() + 0.0))
}
