//! MMSE reformulation of Bob's rate and the resulting concave quadratic
//! minorant in the reflection vector.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::cqp::ConcaveQuadratic;
use crate::error::Result;
use crate::{CMatrix, CVector};

/// Receive equalizer `u` and MSE weight `W` of Bob's link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseAux {
    pub u: Complex64,
    pub w: f64,
}

/// Mean-square error `E(u, v) = |u|²(P|v^H h̃|² + σ²) - 2 Re(u* √P v^H h̃) + 1`.
pub fn mse(u: Complex64, theta_vec: &CVector, h_tilde: &CVector, p_t: f64, sigma2_b: f64) -> f64 {
    let g = theta_vec.dotc(h_tilde) * p_t.sqrt();
    u.norm_sqr() * (g.norm_sqr() + sigma2_b) - 2.0 * (u.conj() * g).re + 1.0
}

/// Optimal equalizer and weight at the current reflection vector.
pub fn mmse_aux(theta_vec: &CVector, h_tilde: &CVector, p_t: f64, sigma2_b: f64) -> MmseAux {
    let g = theta_vec.dotc(h_tilde) * p_t.sqrt();
    let u = g / (g.norm_sqr() + sigma2_b);
    let e = mse(u, theta_vec, h_tilde, p_t, sigma2_b);
    MmseAux { u, w: 1.0 / e }
}

/// `f_b(u, W, v) / ln 2 = (ln W - W E + 1) / ln 2`, in bits.
pub fn weighted_rate(aux: &MmseAux, theta_vec: &CVector, h_tilde: &CVector, p_t: f64, sigma2_b: f64) -> f64 {
    (aux.w.ln() - aux.w * mse(aux.u, theta_vec, h_tilde, p_t, sigma2_b) + 1.0) / LN_2
}

/// Concave quadratic in `v` equal to [`weighted_rate`] for fixed `(u, W)`:
/// `A = P W |u|² h̃ h̃^H / ln 2`, `a = √P W u* h̃ / ln 2` and
/// `c = (ln W - W σ² |u|² - W + 1) / ln 2`.
pub fn surrogate_quadratic(aux: &MmseAux, h_tilde: &CVector, p_t: f64, sigma2_b: f64) -> Result<ConcaveQuadratic> {
    let scale = p_t * aux.w * aux.u.norm_sqr() / LN_2;
    let quad: CMatrix = h_tilde * h_tilde.adjoint() * Complex64::new(scale, 0.0);
    let lin = h_tilde * (aux.u.conj() * (p_t.sqrt() * aux.w / LN_2));
    let offset = (aux.w.ln() - aux.w * sigma2_b * aux.u.norm_sqr() - aux.w + 1.0) / LN_2;
    ConcaveQuadratic::new(quad, lin, offset)
}

/// Largest eigenvalue of the surrogate's curvature, known in closed form
/// because `A` is rank one.
pub fn surrogate_curvature(aux: &MmseAux, h_tilde: &CVector, p_t: f64) -> f64 {
    p_t * aux.w * aux.u.norm_sqr() * h_tilde.norm_squared() / LN_2
}
