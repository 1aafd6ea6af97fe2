//! Quadrature unit conversions between shot-noise units (SNU), natural
//! units (NU) and SI.
//!
//! | unit | `[q, p]` | q to SNU | p to SNU |
//! |------|----------|----------|----------|
//! | SNU  | `2i`     | 1        | 1        |
//! | NU   | `i`      | √2       | √2       |
//! | SI   | `iħ`     | √(2ω/ħ)  | √(2/(ħω)) |

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gaussian::Quadrature;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QuadratureUnit {
    Snu,
    Nu,
    Si { omega: f64, hbar: f64 },
}

impl QuadratureUnit {
    pub fn si(omega: f64) -> Self {
        QuadratureUnit::Si { omega, hbar: HBAR }
    }

    /// Factor taking an amplitude in this unit to SNU.
    pub fn to_snu_factor(self, quadrature: Quadrature) -> Result<f64> {
        match self {
            QuadratureUnit::Snu => Ok(1.0),
            QuadratureUnit::Nu => Ok(std::f64::consts::SQRT_2),
            QuadratureUnit::Si { omega, hbar } => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return Err(invalid("omega", format!("SI units need a positive angular frequency, got {omega}")));
                }
                if !(hbar > 0.0 && hbar.is_finite()) {
                    return Err(invalid("hbar", format!("must be positive, got {hbar}")));
                }
                Ok(match quadrature {
                    Quadrature::Q => (2.0 * omega / hbar).sqrt(),
                    Quadrature::P => (2.0 / (hbar * omega)).sqrt(),
                })
            }
        }
    }

    /// Imaginary part of `[q, p]` in this unit.
    pub fn commutator(self) -> f64 {
        match self {
            QuadratureUnit::Snu => 2.0,
            QuadratureUnit::Nu => 1.0,
            QuadratureUnit::Si { hbar, .. } => hbar,
        }
    }
}

pub fn convert_quadrature(value: f64, quadrature: Quadrature, from: QuadratureUnit, to: QuadratureUnit) -> Result<f64> {
    if from == to {
        return Ok(value);
    }
    Ok(value * from.to_snu_factor(quadrature)? / to.to_snu_factor(quadrature)?)
}

pub fn convert_variance(value: f64, quadrature: Quadrature, from: QuadratureUnit, to: QuadratureUnit) -> Result<f64> {
    if from == to {
        return Ok(value);
    }
    let r = from.to_snu_factor(quadrature)? / to.to_snu_factor(quadrature)?;
    Ok(value * r * r)
}
