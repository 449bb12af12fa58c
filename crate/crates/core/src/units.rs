//! Physical constants and the unit system they are expressed in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitsMode {
    Si,
    /// hbar = eps0 = c = 1; frequencies in units of a reference scale.
    #[default]
    Reduced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub eps0: f64,
    pub c: f64,
    pub mode: UnitsMode,
}

impl PhysicalConstants {
    pub const HBAR_SI: f64 = 1.054_571_817e-34;
    pub const EPS0_SI: f64 = 8.854_187_812_8e-12;
    pub const C_SI: f64 = 299_792_458.0;

    pub fn reduced() -> Self {
        Self {
            hbar: 1.0,
            eps0: 1.0,
            c: 1.0,
            mode: UnitsMode::Reduced,
        }
    }

    pub fn si() -> Self {
        Self {
            hbar: Self::HBAR_SI,
            eps0: Self::EPS0_SI,
            c: Self::C_SI,
            mode: UnitsMode::Si,
        }
    }

    pub fn for_mode(mode: UnitsMode) -> Self {
        match mode {
            UnitsMode::Si => Self::si(),
            UnitsMode::Reduced => Self::reduced(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("eps0", self.eps0), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::reduced()
    }
}
