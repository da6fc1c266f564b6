//! FD-RIS reflection physics: harmonic selection, time-delay phases, the
//! cascaded gain and the normalized beampatterns of FD-RIS and conventional
//! RIS.
//!
//! # Phase convention
//!
//! The time delay `κ_l` of element `l` multiplies the retained harmonic by
//! the reflection coefficient `Θ_ll = exp(-j 2π g Δf_l κ_l)`.
//! [`theta_from_delays`] and [`delays_from_theta`] convert between delays and
//! these diagonal entries.
//!
//! The optimizer and [`effective_gain`] work with the conjugated vector
//! `v = diag(Θ*)`, so that the gain towards a receiver is the inner product
//! `v^H h̃` with `h̃ = h_rx* ∘ (Θ0 h_ar)`. [`BeamState`] stores `v` and keeps
//! the delays consistent with it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{element_offsets, RisGeometry, SphericalPosition};
use crate::error::{check_len, Error, Result};
use crate::{CVector, SPEED_OF_LIGHT};

/// Distance from a removable singularity below which the limit is returned.
pub const SINGULARITY_TOL: f64 = 1e-9;

/// Unit-modulus tolerance accepted by [`delays_from_theta`].
pub const UNIT_MODULUS_TOL: f64 = 1e-6;

/// Fourier coefficient of order `z` of the sawtooth phase modulation
/// `A0 exp(j(φ0 + S mod(t, T)))`.
pub fn fourier_coefficient(slope: f64, period: f64, z: i32, a0: f64, phi0: f64) -> Complex64 {
    let x = slope * period - 2.0 * PI * z as f64;
    let base = Complex64::from_polar(a0, phi0);
    if x.abs() < SINGULARITY_TOL {
        return base;
    }
    // Whole turns make the numerator vanish; return the exact zero rather
    // than the rounding residue of 1 - exp(j 2π m).
    let turns = x / (2.0 * PI);
    if (turns - turns.round()).abs() * 2.0 * PI < SINGULARITY_TOL {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::i() * base * (Complex64::new(1.0, 0.0) - Complex64::cis(x)) / x
}

fn check_freqs(freqs: &[f64]) -> Result<()> {
    match freqs.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        Some(bad) => Err(Error::invalid(
            "freqs",
            format!("modulation frequencies must be positive, got {bad}"),
        )),
        None => Ok(()),
    }
}

/// Reflection coefficients `exp(-j 2π g Δf_l κ_l)` for delays in `[0, 1/Δf_l]`.
pub fn theta_from_delays(freqs: &[f64], delays: &[f64], g: u32) -> Result<CVector> {
    check_len(freqs.len(), delays.len())?;
    check_freqs(freqs)?;
    for (index, (&df, &k)) in freqs.iter().zip(delays).enumerate() {
        let max = 1.0 / df;
        if !(k >= 0.0 && k <= max * (1.0 + 1e-12)) {
            return Err(Error::DelayOutOfRange { index, delay: k, max });
        }
    }
    Ok(CVector::from_iterator(
        freqs.len(),
        freqs
            .iter()
            .zip(delays)
            .map(|(&df, &k)| Complex64::cis(-2.0 * PI * g as f64 * df * k)),
    ))
}

/// Inverse of [`theta_from_delays`]: `κ_l = mod(-∠Θ_ll, 2π) / (2π g Δf_l)`,
/// always inside `[0, 1/(g Δf_l))`.
pub fn delays_from_theta(theta: &CVector, freqs: &[f64], g: u32) -> Result<Vec<f64>> {
    check_len(theta.len(), freqs.len())?;
    check_freqs(freqs)?;
    theta
        .iter()
        .zip(freqs)
        .enumerate()
        .map(|(index, (t, &df))| {
            let modulus = t.norm();
            if (modulus - 1.0).abs() > UNIT_MODULUS_TOL {
                return Err(Error::NotUnitModulus { index, modulus });
            }
            Ok(phase_to_delay(-t.arg(), df, g))
        })
        .collect()
}

/// Delay producing phase `-phase` on the retained harmonic, wrapped into one period.
fn phase_to_delay(phase: f64, df: f64, g: u32) -> f64 {
    let mut wrapped = phase.rem_euclid(2.0 * PI);
    if wrapped >= 2.0 * PI {
        wrapped = 0.0;
    }
    wrapped / (2.0 * PI * g as f64 * df)
}

/// Cascaded gain `Σ_l conj(h_rx,l) conj(v_l) A0 e^{jφ0} h_ar,l = v^H h̃`,
/// where `v = diag(Θ*)`.
pub fn effective_gain(theta_vec: &CVector, h_rx: &CVector, h_ar: &CVector, geom: &RisGeometry) -> Result<Complex64> {
    check_len(theta_vec.len(), h_rx.len())?;
    check_len(theta_vec.len(), h_ar.len())?;
    let c0 = geom.initial_coefficient();
    Ok(theta_vec
        .iter()
        .zip(h_rx.iter())
        .zip(h_ar.iter())
        .map(|((v, hr), ha)| hr.conj() * v.conj() * c0 * ha)
        .sum())
}

/// `h̃ = h_rx* ∘ (Θ0 h_ar)`, so that the gain is `v^H h̃`.
pub fn cascade_vector(h_rx: &CVector, incident: &CVector) -> Result<CVector> {
    check_len(h_rx.len(), incident.len())?;
    Ok(h_rx.zip_map(incident, |h, c| h.conj() * c))
}

/// Decision variables of the surface: `v = diag(Θ*)`, modulation
/// frequencies and the delays that realise `v` at those frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub theta_vec: CVector,
    pub freqs: Vec<f64>,
    pub delays: Vec<f64>,
}

impl BeamState {
    pub fn from_delays(freqs: Vec<f64>, delays: Vec<f64>, g: u32) -> Result<Self> {
        let theta = theta_from_delays(&freqs, &delays, g)?;
        Ok(Self {
            theta_vec: theta.map(|t| t.conj()),
            freqs,
            delays,
        })
    }

    /// Builds the state from `v`; entries are renormalized to unit modulus.
    pub fn from_theta_vec(theta_vec: CVector, freqs: Vec<f64>, g: u32) -> Result<Self> {
        let unit = theta_vec.map(|t| {
            let n = t.norm();
            if n > 0.0 {
                t / n
            } else {
                Complex64::new(1.0, 0.0)
            }
        });
        let delays = delays_from_theta(&unit.map(|t| t.conj()), &freqs, g)?;
        Ok(Self {
            theta_vec: unit,
            freqs,
            delays,
        })
    }

    pub fn len(&self) -> usize {
        self.theta_vec.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_vec.is_empty()
    }
}

fn carrier_phase(geom: &RisGeometry, pos_alice: &SphericalPosition, probe: &SphericalPosition) -> Vec<f64> {
    let ar = element_offsets(geom, pos_alice);
    let pr = element_offsets(geom, probe);
    ar.upsilon
        .iter()
        .zip(&pr.upsilon)
        .map(|(a, p)| 2.0 * PI * geom.f_c * (a + p) / SPEED_OF_LIGHT)
        .collect()
}

fn normalized_power(sum: Complex64, n: usize) -> f64 {
    (sum.norm_sqr() / (n * n) as f64).clamp(0.0, 1.0)
}

/// Normalized FD-RIS beampattern at `probe`:
/// `|Σ_l exp(-j(φ1,l - φ2,l + φ3,l))|² / L²`.
pub fn beampattern_fdris(
    geom: &RisGeometry,
    pos_alice: &SphericalPosition,
    probe: &SphericalPosition,
    state: &BeamState,
) -> f64 {
    let n = geom.num_elements();
    debug_assert_eq!(state.len(), n);
    let phi1 = carrier_phase(geom, pos_alice, probe);
    let pr = element_offsets(geom, probe);
    let g = geom.g as f64;
    let sum: Complex64 = (0..n)
        .map(|l| {
            let df = state.freqs[l];
            let phi2 = geom.phi0 - 2.0 * PI * g * df * state.delays[l];
            let phi3 = 2.0 * PI * g * df * pr.dists[l] / SPEED_OF_LIGHT;
            Complex64::cis(-(phi1[l] - phi2 + phi3))
        })
        .sum();
    normalized_power(sum, n)
}

/// Normalized conventional-RIS beampattern `|Σ_l exp(-jφ1,l) U_l|² / L²`.
pub fn beampattern_conventional(
    geom: &RisGeometry,
    pos_alice: &SphericalPosition,
    probe: &SphericalPosition,
    reflect_coeffs: &CVector,
) -> f64 {
    let n = geom.num_elements();
    debug_assert_eq!(reflect_coeffs.len(), n);
    let phi1 = carrier_phase(geom, pos_alice, probe);
    let sum: Complex64 = phi1
        .iter()
        .zip(reflect_coeffs.iter())
        .map(|(p, u)| Complex64::cis(-p) * u)
        .sum();
    normalized_power(sum, n)
}

/// Conventional reflection coefficients `U_l = exp(jφ1,l)` steering towards `target`.
pub fn conventional_alignment(geom: &RisGeometry, pos_alice: &SphericalPosition, target: &SphericalPosition) -> CVector {
    let phi1 = carrier_phase(geom, pos_alice, target);
    CVector::from_iterator(phi1.len(), phi1.iter().map(|p| Complex64::cis(*p)))
}

/// Delays meeting the alignment condition `φ2,l = φ1,l + φ3,l` at `target`.
pub fn align_delays(
    geom: &RisGeometry,
    pos_alice: &SphericalPosition,
    target: &SphericalPosition,
    freqs: &[f64],
) -> Result<Vec<f64>> {
    check_len(geom.num_elements(), freqs.len())?;
    check_freqs(freqs)?;
    let phi1 = carrier_phase(geom, pos_alice, target);
    let tr = element_offsets(geom, target);
    let g = geom.g as f64;
    Ok(freqs
        .iter()
        .enumerate()
        .map(|(l, &df)| {
            let phi3 = 2.0 * PI * g * df * tr.dists[l] / SPEED_OF_LIGHT;
            phase_to_delay(geom.phi0 - phi1[l] - phi3, df, geom.g)
        })
        .collect())
}

/// Linearly spaced modulation frequencies `lo + l (hi - lo) / (L - 1)`.
pub fn linear_frequencies(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|l| lo + l as f64 * (hi - lo) / (n - 1) as f64)
        .collect()
}
