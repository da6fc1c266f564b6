//! Array geometry, large-scale path loss, line-of-sight steering vectors and
//! Rician channel synthesis.
//!
//! Phase conventions follow the reflected-signal model: the Alice→RIS LoS
//! entry of element `l` is `exp(-j 2π f_c Υ_l / c)`, while the RIS→receiver
//! LoS entry carries the modulation-frequency term,
//! `exp(+j 2π (f_c Υ_l + g Δf_l d_l) / c)`. Receiver channels enter the
//! received signal conjugated (`h^H Θ Θ0 h_ar`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::{CVector, SPEED_OF_LIGHT};

/// A point relative to the RIS reference element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPosition {
    /// Azimuth, radians.
    pub theta: f64,
    /// Elevation, radians.
    pub phi: f64,
    /// Range from the reference element, meters.
    pub dist: f64,
}

impl SphericalPosition {
    pub fn new(theta: f64, phi: f64, dist: f64) -> Result<Self> {
        let p = Self { theta, phi, dist };
        p.validate()?;
        Ok(p)
    }

    /// Builds a position from angles in degrees.
    pub fn from_degrees(theta_deg: f64, phi_deg: f64, dist: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians(), dist)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(Error::invalid("position", "angles must be finite"));
        }
        if !(self.dist > 0.0 && self.dist.is_finite()) {
            return Err(Error::invalid(
                "position",
                format!("range must be positive, got {}", self.dist),
            ));
        }
        Ok(())
    }

    /// Same direction, different range.
    pub fn with_dist(&self, dist: f64) -> Self {
        Self { dist, ..*self }
    }
}

/// Panel layout and reflection constants of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisGeometry {
    pub l_y: usize,
    pub l_z: usize,
    /// Inter-element spacing, meters.
    pub spacing: f64,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Retained harmonic order.
    pub g: u32,
    /// Initial reflection amplitude.
    pub a0: f64,
    /// Initial reflection phase, radians.
    pub phi0: f64,
}

impl RisGeometry {
    /// Half-wavelength panel with `g = 1`, `A0 = 1`, `φ0 = 0`.
    pub fn half_wavelength(l_y: usize, l_z: usize, f_c: f64) -> Result<Self> {
        let geom = Self {
            l_y,
            l_z,
            spacing: SPEED_OF_LIGHT / (2.0 * f_c),
            f_c,
            g: 1,
            a0: 1.0,
            phi0: 0.0,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Square-ish panel with `n` elements: `l_y * l_z = n` and `l_y >= l_z`.
    pub fn half_wavelength_with_count(n: usize, f_c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("elements", "need at least one element"));
        }
        let mut l_z = (n as f64).sqrt().floor() as usize;
        while n % l_z != 0 {
            l_z -= 1;
        }
        Self::half_wavelength(n / l_z, l_z, f_c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_y == 0 || self.l_z == 0 {
            return Err(Error::invalid("geometry", "element counts must be >= 1"));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::invalid("spacing", "must be positive"));
        }
        if !(self.f_c > 0.0) {
            return Err(Error::invalid("f_c", "must be positive"));
        }
        if self.g == 0 {
            return Err(Error::invalid("g", "harmonic order must be >= 1"));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::invalid("a0", "must be positive"));
        }
        if !self.phi0.is_finite() {
            return Err(Error::invalid("phi0", "must be finite"));
        }
        Ok(())
    }

    /// Total element count `L`.
    pub fn num_elements(&self) -> usize {
        self.l_y * self.l_z
    }

    /// Initial reflection coefficient `A0 exp(j φ0)`.
    pub fn initial_coefficient(&self) -> Complex64 {
        Complex64::from_polar(self.a0, self.phi0)
    }

    /// Zero-based `(l_y, l_z)` of flattened element `l`.
    pub fn element_indices(&self, l: usize) -> (usize, usize) {
        (l % self.l_y, l / self.l_y)
    }
}

/// Per-element offsets and distances of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Υ_l, meters.
    pub upsilon: Vec<f64>,
    /// d_l = base_dist + Υ_l, meters.
    pub dists: Vec<f64>,
    pub base_dist: f64,
}

impl LinkGeometry {
    pub fn len(&self) -> usize {
        self.upsilon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upsilon.is_empty()
    }
}

/// Per-element offsets `Υ_l` and distances `d_l` towards `pos`.
pub fn element_offsets(geom: &RisGeometry, pos: &SphericalPosition) -> LinkGeometry {
    let z_step = geom.spacing * pos.theta.cos();
    let y_step = geom.spacing * pos.theta.sin() * pos.phi.cos();
    let upsilon: Vec<f64> = (0..geom.num_elements())
        .map(|l| {
            let (ly, lz) = geom.element_indices(l);
            lz as f64 * z_step + ly as f64 * y_step
        })
        .collect();
    let dists = upsilon.iter().map(|u| pos.dist + u).collect();
    LinkGeometry {
        upsilon,
        dists,
        base_dist: pos.dist,
    }
}

/// Amplitude path loss `ρ(d)` with `ρ²(d) = -45 - 20 log10(d)` dB.
pub fn path_loss_amplitude(dist: f64) -> Result<f64> {
    if !(dist > 0.0 && dist.is_finite()) {
        return Err(Error::invalid(
            "dist",
            format!("path loss needs a positive range, got {dist}"),
        ));
    }
    let db = -45.0 - 20.0 * dist.log10();
    Ok(10f64.powf(db / 20.0))
}

/// Alice→RIS LoS vector, `exp(-j 2π f_c Υ_l / c)`.
pub fn los_alice_ris(geom: &RisGeometry, pos_a: &SphericalPosition) -> CVector {
    let link = element_offsets(geom, pos_a);
    let k = 2.0 * PI * geom.f_c / SPEED_OF_LIGHT;
    CVector::from_iterator(
        link.len(),
        link.upsilon.iter().map(|u| Complex64::cis(-k * u)),
    )
}

/// Phase of the RIS→receiver LoS entry of element `l`.
#[inline]
pub(crate) fn receiver_phase(geom: &RisGeometry, link: &LinkGeometry, l: usize, df: f64) -> f64 {
    2.0 * PI * (geom.f_c * link.upsilon[l] + geom.g as f64 * df * link.dists[l]) / SPEED_OF_LIGHT
}

/// RIS→receiver LoS vector, `exp(j 2π (f_c Υ_l + g Δf_l d_l) / c)`.
///
/// Passing all-zero frequencies yields the conventional-RIS (angle only)
/// steering vector.
pub fn los_ris_receiver(geom: &RisGeometry, link: &LinkGeometry, freqs: &[f64]) -> Result<CVector> {
    check_len(link.len(), freqs.len())?;
    if let Some(bad) = freqs.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(Error::invalid(
            "freqs",
            format!("modulation frequency must be finite and non-negative, got {bad}"),
        ));
    }
    Ok(CVector::from_iterator(
        link.len(),
        freqs
            .iter()
            .enumerate()
            .map(|(l, &df)| Complex64::cis(receiver_phase(geom, link, l, df))),
    ))
}

/// Rician assembly `ρ (β1 los + β2 nlos)`.
pub fn assemble_rician(rho: f64, beta1: f64, beta2: f64, los: &CVector, nlos: &CVector) -> Result<CVector> {
    check_len(los.len(), nlos.len())?;
    Ok(CVector::from_iterator(
        los.len(),
        los.iter()
            .zip(nlos.iter())
            .map(|(a, b)| (a * beta1 + b * beta2) * rho),
    ))
}

/// Rician split `(β1, β2)` for a linear Rician factor `β > 0`.
pub fn rician_split(beta: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("rician factor", "must be positive and finite"));
    }
    Ok(((beta / (beta + 1.0)).sqrt(), (1.0 / (beta + 1.0)).sqrt()))
}

/// i.i.d. CN(0, 1) entries drawn from a caller-owned RNG.
pub fn sample_nlos<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_iterator(
        len,
        (0..len).map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        }),
    )
}

/// Deterministic CN(0, 1) draw for a given seed.
pub fn sample_nlos_seeded(seed: u64, len: usize) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_nlos(&mut rng, len)
}

/// One draw of every link. The Alice→RIS channel is frequency independent
/// and stored fully assembled; receiver links keep geometry and NLoS draw
/// separately because their LoS part depends on the modulation frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_ar: CVector,
    pub rb_geom: LinkGeometry,
    pub rb_nlos: CVector,
    pub rwk_geoms: Vec<LinkGeometry>,
    pub rwk_nlos: Vec<CVector>,
    pub rho_rb: f64,
    pub rho_rwk: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
}

impl ChannelRealization {
    /// Draws all NLoS components from `rng`, in the order Alice→RIS, RIS→Bob,
    /// then RIS→Willie 1..K.
    pub fn draw<R: Rng + ?Sized>(
        geom: &RisGeometry,
        alice: &SphericalPosition,
        bob: &SphericalPosition,
        willies: &[SphericalPosition],
        rician_factor: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let n = geom.num_elements();
        let (beta1, beta2) = rician_split(rician_factor)?;
        let nlos_ar = sample_nlos(rng, n);
        let rb_nlos = sample_nlos(rng, n);
        let rwk_nlos = willies.iter().map(|_| sample_nlos(rng, n)).collect();
        Self::from_parts(geom, alice, bob, willies, beta1, beta2, &nlos_ar, rb_nlos, rwk_nlos)
    }

    /// Assembles a realization from explicit NLoS draws.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        geom: &RisGeometry,
        alice: &SphericalPosition,
        bob: &SphericalPosition,
        willies: &[SphericalPosition],
        beta1: f64,
        beta2: f64,
        nlos_ar: &CVector,
        rb_nlos: CVector,
        rwk_nlos: Vec<CVector>,
    ) -> Result<Self> {
        geom.validate()?;
        alice.validate()?;
        bob.validate()?;
        let n = geom.num_elements();
        check_len(n, nlos_ar.len())?;
        check_len(n, rb_nlos.len())?;
        check_len(willies.len(), rwk_nlos.len())?;
        for (w, d) in willies.iter().zip(&rwk_nlos) {
            w.validate()?;
            check_len(n, d.len())?;
        }
        let h_ar = assemble_rician(
            path_loss_amplitude(alice.dist)?,
            beta1,
            beta2,
            &los_alice_ris(geom, alice),
            nlos_ar,
        )?;
        Ok(Self {
            h_ar,
            rb_geom: element_offsets(geom, bob),
            rb_nlos,
            rwk_geoms: willies.iter().map(|w| element_offsets(geom, w)).collect(),
            rwk_nlos,
            rho_rb: path_loss_amplitude(bob.dist)?,
            rho_rwk: willies
                .iter()
                .map(|w| path_loss_amplitude(w.dist))
                .collect::<Result<_>>()?,
            beta1,
            beta2,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.h_ar.len()
    }

    pub fn num_wardens(&self) -> usize {
        self.rwk_geoms.len()
    }

    /// Full RIS→Bob channel at modulation frequencies `freqs`.
    pub fn h_rb(&self, geom: &RisGeometry, freqs: &[f64]) -> Result<CVector> {
        let los = los_ris_receiver(geom, &self.rb_geom, freqs)?;
        assemble_rician(self.rho_rb, self.beta1, self.beta2, &los, &self.rb_nlos)
    }

    /// LoS part (unit modulus, no path loss) of the RIS→Willie `k` channel.
    pub fn h_rw_los(&self, geom: &RisGeometry, k: usize, freqs: &[f64]) -> Result<CVector> {
        los_ris_receiver(geom, &self.rwk_geoms[k], freqs)
    }

    /// Full RIS→Willie `k` channel including the stored NLoS draw.
    pub fn h_rw(&self, geom: &RisGeometry, k: usize, freqs: &[f64]) -> Result<CVector> {
        let los = self.h_rw_los(geom, k, freqs)?;
        assemble_rician(self.rho_rwk[k], self.beta1, self.beta2, &los, &self.rwk_nlos[k])
    }

    /// `Θ0 h_ar`, the cascaded incident field at each element.
    pub fn incident(&self, geom: &RisGeometry) -> CVector {
        self.h_ar.map(|h| h * geom.initial_coefficient())
    }
}
