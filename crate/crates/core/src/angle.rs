//! Finite plane angles.

use core::f64::consts::PI;
use core::fmt;

use crate::{Error, Result};

/// A finite angle, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn from_radians(radians: f64) -> Result<Self> {
        if radians.is_finite() {
            Ok(Angle(radians))
        } else {
            Err(Error::NonFinite { what: "angle" })
        }
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        if degrees.is_finite() {
            Ok(Angle(degrees * (PI / 180.0)))
        } else {
            Err(Error::NonFinite { what: "angle" })
        }
    }

    /// Builds an angle from a value the caller already knows is finite.
    pub(crate) fn from_radians_unchecked(radians: f64) -> Self {
        debug_assert!(radians.is_finite());
        Angle(radians)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0 * (180.0 / PI)
    }

    pub fn sin(self) -> f64 {
        libm::sin(self.0)
    }

    pub fn cos(self) -> f64 {
        libm::cos(self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*}°", p, self.degrees()),
            None => write!(f, "{}°", self.degrees()),
        }
    }
}
