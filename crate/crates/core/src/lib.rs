//! Frequency-diverse reconfigurable intelligent surface (FD-RIS) model for
//! covert communications.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`]: array geometry, path loss, LoS steering vectors and Rician draws.
//! * [`surface`]: harmonic selection, time-delay phases and beampatterns.
//! * [`covert`]: detection error probability, optimal warden threshold,
//!   log-MGF covert constraint and Bob's rate.
//! * [`cqp`]: a small projected-gradient engine for concave quadratics over
//!   a ball, rank-one slabs and a box.
//! * [`optimizer`]: the alternating time-delay / modulation-frequency design.
//! * [`scenario`] and [`experiment`]: presets, Monte Carlo orchestration and
//!   CSV/JSON emission used by the `fdris` binary.
//!
//! Complex vectors are `nalgebra::DVector<Complex64>`; element `l` of every
//! per-element vector follows the flattening `l = l_z * L_y + l_y` (zero based).

pub mod channel;
pub mod covert;
pub mod cqp;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod optimizer;
pub mod scenario;
pub mod surface;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;
/// Complex dense matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Real column vector.
pub type RVector = nalgebra::DVector<f64>;
/// Real dense matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power in dBm to watts.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
