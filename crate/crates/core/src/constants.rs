use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The fixed parameters of the NLS: mass `m`, charge `q`, the Planck-like
/// constant `chi` and the speed of light `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    pub m: f64,
    pub q: f64,
    pub chi: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub fn new(m: f64, q: f64, chi: f64, c: f64) -> Result<Self> {
        let k = Self { m, q, chi, c };
        k.validate()?;
        Ok(k)
    }

    /// All four set to one.
    pub fn unit() -> Self {
        Self { m: 1.0, q: 1.0, chi: 1.0, c: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("q", self.q), ("chi", self.chi), ("c", self.c)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Invalid(format!("constant {name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    /// The natural residual scale χ²/(2ma²) of a corpuscle of size `a`.
    pub fn residual_scale(&self, a: f64) -> f64 {
        self.chi * self.chi / (2.0 * self.m * a * a)
    }
}
