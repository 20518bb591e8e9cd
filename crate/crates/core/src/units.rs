//! Unit conventions and physical constants.
//!
//! All frequencies, interaction strengths, and dissipation rates are stored
//! internally as angular frequencies in rad/s; times in seconds; temperatures
//! in kelvin. With hbar = 1 both a Hamiltonian matrix element (rad/s) and a
//! Lindblad rate (1/s) multiply `t` in an exponent, so they share one
//! canonical unit.
//!
//! Input unit suffixes follow the conventions of the trapped-ion and
//! spectroscopy literature they come from:
//!
//! - `Hz`, `kHz`, `MHz`, `GHz` are *cyclic* frequencies: a trap frequency
//!   quoted as "1.34 MHz" means nu/2pi = 1.34 MHz, so the stored value is
//!   2pi * 1.34e6 rad/s. Linewidths quoted in MHz follow the same rule.
//! - `s-1` (alias `/s`), `ms-1`, `us-1`, `ns-1`, `ps-1`, `fs-1` are *plain
//!   rates*: "120 ps-1" is 1.2e14 1/s with no 2pi. Spectroscopic decay and
//!   dephasing rates are quoted this way.
//! - `cm-1` wavenumbers convert by 2*pi*c: "112 cm-1" is 2.10969e13 rad/s.
//! - `rad/s` is stored as-is.
//!
//! Reports render both conventions (`rad/s` and the value divided by 2pi).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K (exact, SI).
pub const KB: f64 = 1.380649e-23;
/// Reduced Planck constant, J*s.
pub const HBAR: f64 = 1.054571817e-34;
/// Speed of light, cm/s (exact).
pub const SPEED_OF_LIGHT_CM_S: f64 = 2.99792458e10;
/// Vacuum permeability, T*m/A.
pub const MU_0: f64 = 1.25663706212e-6;

/// kB/hbar = 1.30920e11 rad s^-1 K^-1 (6 s.f.); kB*T at 300 K corresponds
/// to 208.510 cm^-1.
pub const KB_OVER_HBAR: f64 = KB / HBAR;

/// Angular frequency of one wavenumber: 2*pi*c = 1.88365e11 rad/s per cm^-1.
pub const RAD_PER_CM1: f64 = std::f64::consts::TAU * SPEED_OF_LIGHT_CM_S;

/// Physical dimension of a parsed quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Angular frequency or rate, rad/s (equivalently 1/s).
    AngularFrequency,
    /// Time, seconds.
    Time,
    /// Temperature, kelvin.
    Temperature,
}

impl Dimension {
    fn canonical_suffix(self) -> &'static str {
        match self {
            Dimension::AngularFrequency => "rad/s",
            Dimension::Time => "s",
            Dimension::Temperature => "K",
        }
    }
}

/// A value with its dimension, stored in canonical units.
///
/// Configuration files write quantities as `"<number> <unit>"` strings; the
/// canonical serialisation always uses the canonical unit, so a parse ->
/// serialise -> parse round trip is bit-exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

const ANGULAR_UNITS: &[(&str, f64)] = &[
    ("rad/s", 1.0),
    ("Hz", std::f64::consts::TAU),
    ("kHz", std::f64::consts::TAU * 1e3),
    ("MHz", std::f64::consts::TAU * 1e6),
    ("GHz", std::f64::consts::TAU * 1e9),
    ("cm-1", RAD_PER_CM1),
    ("s-1", 1.0),
    ("/s", 1.0),
    ("ms-1", 1e3),
    ("us-1", 1e6),
    ("ns-1", 1e9),
    ("ps-1", 1e12),
    ("fs-1", 1e15),
];

const TIME_UNITS: &[(&str, f64)] = &[
    ("s", 1.0),
    ("ms", 1e-3),
    ("us", 1e-6),
    ("ns", 1e-9),
    ("ps", 1e-12),
    ("fs", 1e-15),
];

const TEMPERATURE_UNITS: &[(&str, f64)] = &[("K", 1.0), ("mK", 1e-3)];

impl Quantity {
    pub fn angular(value: f64) -> Self {
        Quantity { value, dimension: Dimension::AngularFrequency }
    }

    pub fn time(value: f64) -> Self {
        Quantity { value, dimension: Dimension::Time }
    }

    pub fn temperature(value: f64) -> Self {
        Quantity { value, dimension: Dimension::Temperature }
    }

    /// Parse `"<number> <unit>"`. The unit decides the dimension.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let (num_part, unit_part) = trimmed.split_once(char::is_whitespace).ok_or_else(|| {
            Error::config(
                trimmed,
                "expected \"<number> <unit>\", e.g. \"112 cm-1\" or \"300 K\"",
            )
        })?;
        let value: f64 = num_part.parse().map_err(|_| {
            Error::config(trimmed, format!("cannot parse `{num_part}` as a number"))
        })?;
        let unit = unit_part.trim();
        for &(name, factor) in ANGULAR_UNITS {
            if unit == name {
                return Ok(Quantity::angular(value * factor));
            }
        }
        for &(name, factor) in TIME_UNITS {
            if unit == name {
                return Ok(Quantity::time(value * factor));
            }
        }
        for &(name, factor) in TEMPERATURE_UNITS {
            if unit == name {
                return Ok(Quantity::temperature(value * factor));
            }
        }
        Err(Error::config(trimmed, format!("unknown unit `{unit}`")))
    }

    pub fn expect_angular(&self, path: &str) -> Result<f64> {
        if self.dimension == Dimension::AngularFrequency {
            Ok(self.value)
        } else {
            Err(Error::config(path, "expected a frequency or rate (rad/s-compatible unit)"))
        }
    }

    pub fn expect_time(&self, path: &str) -> Result<f64> {
        if self.dimension == Dimension::Time {
            Ok(self.value)
        } else {
            Err(Error::config(path, "expected a time (s-compatible unit)"))
        }
    }

    pub fn expect_temperature(&self, path: &str) -> Result<f64> {
        if self.dimension == Dimension::Temperature {
            Ok(self.value)
        } else {
            Err(Error::config(path, "expected a temperature (K)"))
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `{}` on f64 is shortest-round-trip, so reparsing restores the bits.
        write!(f, "{} {}", self.value, self.dimension.canonical_suffix())
    }
}

impl Serialize for Quantity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Quantity::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Render an angular frequency as both rad/s and cycles (value/2pi, Hz).
pub fn both_renderings(omega: f64) -> String {
    format!("{:.6e} rad/s ({:.6e} Hz /2pi)", omega, omega / std::f64::consts::TAU)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_conversion() {
        let q = Quantity::parse("112 cm-1").unwrap();
        assert_eq!(q.dimension, Dimension::AngularFrequency);
        // 2*pi*c*112 = 2.10969e13 rad/s
        assert!((q.value - 2.10969e13).abs() / 2.10969e13 < 1e-5);
    }

    #[test]
    fn cyclic_vs_plain_rate() {
        // MHz carries 2pi, ps-1 does not.
        let trap = Quantity::parse("1.34 MHz").unwrap();
        assert!((trap.value - std::f64::consts::TAU * 1.34e6).abs() < 1e-3);
        let rate = Quantity::parse("120 ps-1").unwrap();
        assert_eq!(rate.value, 1.2e14);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for text in ["112 cm-1", "0.31 ps-1", "20 MHz", "1.5 fs", "300 K", "29 /s"] {
            let q = Quantity::parse(text).unwrap();
            let q2 = Quantity::parse(&q.to_string()).unwrap();
            assert_eq!(q.value.to_bits(), q2.value.to_bits(), "{text}");
            assert_eq!(q.dimension, q2.dimension);
        }
    }

    #[test]
    fn unknown_unit_is_an_error() {
        assert!(Quantity::parse("3 furlongs").is_err());
        assert!(Quantity::parse("12").is_err());
        assert!(Quantity::parse("abc cm-1").is_err());
    }

    #[test]
    fn boltzmann_scale_at_300k() {
        // kB*300K/(hc) = 208.510 cm^-1
        let cm1 = KB_OVER_HBAR * 300.0 / RAD_PER_CM1;
        assert!((cm1 - 208.510).abs() < 0.01, "{cm1}");
    }
}
