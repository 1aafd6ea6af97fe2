//! Key-rate engine for Gaussian-modulated coherent-state CV-QKD.
//!
//! Modules, bottom up:
//! - [`gaussian`]: covariance matrices, symplectic algebra, entropies, partial measurements
//! - [`units`]: SNU / NU / SI quadrature conversions
//! - [`states`]: TMSVS, noisy channel, heterodyne split, PM/EB rescaling
//! - [`noise`]: hardware excess-noise models and the noise budget
//! - [`security`]: SNR, mutual information, Holevo bounds, secret fraction
//! - [`mc`]: Monte-Carlo symbol simulator with calibration frames
//! - [`estimation`]: calibration and `(T, ξ)` estimation from simulated data

pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod mc;
pub mod noise;
pub mod security;
pub mod states;
pub mod units;

pub use error::{Error, Result};
