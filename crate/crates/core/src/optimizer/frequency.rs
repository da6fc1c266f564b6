//! Modulation-frequency subproblem: analytic derivatives of Bob's and the
//! wardens' cascaded gains and one SCA step.
//!
//! The public derivative routines work in hertz. The SCA step rescales
//! frequencies to MHz and gains to their peak values so that curvature
//! estimates are O(1).

use std::f64::consts::PI;

use num_complex::Complex64;

use super::SolverOptions;
use crate::channel::{receiver_phase, ChannelRealization, LinkGeometry, RisGeometry};
use crate::cqp::{maximize, Ball, BoxBounds, ConcaveQuadratic, CqpOptions, FeasibleSet};
use crate::error::{check_len, Error, Result};
use crate::linalg::symmetric_upper_bound;
use crate::{CMatrix, CVector, RMatrix, RVector, SPEED_OF_LIGHT};

const MHZ: f64 = 1e6;

/// Fixed quantities of the frequency subproblem for a given reflection vector.
#[derive(Debug, Clone)]
pub struct FreqContext<'a> {
    pub geom: &'a RisGeometry,
    pub chan: &'a ChannelRealization,
    /// `ĥ = Θ Θ0 h_ar`.
    pub h_hat: CVector,
    /// Covert caps `ι_k` on `ĝ_k`.
    pub caps: Vec<f64>,
    pub f_min: f64,
    pub f_max: f64,
}

impl<'a> FreqContext<'a> {
    pub fn new(
        geom: &'a RisGeometry,
        chan: &'a ChannelRealization,
        theta_vec: &CVector,
        caps: Vec<f64>,
        f_min: f64,
        f_max: f64,
    ) -> Result<Self> {
        check_len(chan.num_elements(), theta_vec.len())?;
        check_len(chan.num_wardens(), caps.len())?;
        if !(f_min >= 0.0 && f_min < f_max) {
            return Err(Error::invalid("f_bounds", "need 0 <= f_min < f_max"));
        }
        let incident = chan.incident(geom);
        let h_hat = theta_vec.zip_map(&incident, |v, c| v.conj() * c);
        Ok(Self { geom, chan, h_hat, caps, f_min, f_max })
    }

    fn bob(&self) -> LinkModel<'_> {
        LinkModel {
            link: &self.chan.rb_geom,
            amp: self.chan.rho_rb * self.chan.beta1,
            nlos: Some((&self.chan.rb_nlos, self.chan.rho_rb * self.chan.beta2)),
        }
    }

    fn warden(&self, k: usize) -> LinkModel<'_> {
        LinkModel { link: &self.chan.rwk_geoms[k], amp: 1.0, nlos: None }
    }

    /// `g̃(f) = |h_rb^H ĥ|²`.
    pub fn bob_gain(&self, freqs: &[f64]) -> f64 {
        self.terms(&self.bob(), freqs).s.norm_sqr()
    }

    /// `ĝ_k(f) = |(h^LoS_rwk)^H ĥ|²`.
    pub fn warden_gain(&self, k: usize, freqs: &[f64]) -> f64 {
        self.terms(&self.warden(k), freqs).s.norm_sqr()
    }

    fn terms(&self, model: &LinkModel<'_>, freqs: &[f64]) -> Terms {
        let g = self.geom.g as f64;
        let n = freqs.len();
        let mut s = Complex64::new(0.0, 0.0);
        let mut w = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        for (l, &df) in freqs.iter().enumerate() {
            let e = Complex64::cis(receiver_phase(self.geom, model.link, l, df));
            let mut h = e * model.amp;
            if let Some((nlos, scale)) = model.nlos {
                h += nlos[l] * scale;
            }
            let hh = self.h_hat[l];
            s += h.conj() * hh;
            let gl = 2.0 * PI * g * model.link.dists[l] / SPEED_OF_LIGHT;
            // d/df of conj(h_l) only touches the LoS term.
            w.push(Complex64::new(0.0, -gl) * model.amp * e.conj() * hh);
            gamma.push(gl);
        }
        Terms { s, w, gamma }
    }
}

struct LinkModel<'a> {
    link: &'a LinkGeometry,
    amp: f64,
    nlos: Option<(&'a CVector, f64)>,
}

struct Terms {
    s: Complex64,
    w: Vec<Complex64>,
    gamma: Vec<f64>,
}

impl Terms {
    fn gradient(&self) -> RVector {
        RVector::from_iterator(self.w.len(), self.w.iter().map(|w| 2.0 * (w * self.s.conj()).re))
    }

    fn hessian(&self) -> RMatrix {
        let n = self.w.len();
        let mut h = RMatrix::from_fn(n, n, |l, m| 2.0 * (self.w[l] * self.w[m].conj()).re);
        for l in 0..n {
            let dw = Complex64::new(0.0, -self.gamma[l]) * self.w[l];
            h[(l, l)] += 2.0 * (dw * self.s.conj()).re;
        }
        (&h + h.transpose()) * 0.5
    }
}

fn check_freqs(ctx: &FreqContext<'_>, freqs: &[f64]) -> Result<()> {
    check_len(ctx.h_hat.len(), freqs.len())?;
    if let Some(bad) = freqs.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(Error::invalid("freqs", format!("invalid modulation frequency {bad}")));
    }
    Ok(())
}

/// Gradients (per hertz) of `g̃` and of every `ĝ_k`.
pub fn freq_gradient(freqs: &[f64], ctx: &FreqContext<'_>) -> Result<(RVector, Vec<RVector>)> {
    check_freqs(ctx, freqs)?;
    let bob = ctx.terms(&ctx.bob(), freqs).gradient();
    let wardens = (0..ctx.caps.len()).map(|k| ctx.terms(&ctx.warden(k), freqs).gradient()).collect();
    Ok((bob, wardens))
}

/// Hessians (per hertz²) of `g̃` and of every `ĝ_k`.
pub fn freq_hessian(freqs: &[f64], ctx: &FreqContext<'_>) -> Result<(RMatrix, Vec<RMatrix>)> {
    check_freqs(ctx, freqs)?;
    let bob = ctx.terms(&ctx.bob(), freqs).hessian();
    let wardens = (0..ctx.caps.len()).map(|k| ctx.terms(&ctx.warden(k), freqs).hessian()).collect();
    Ok((bob, wardens))
}

/// Curvature bound `ν ≥ λ_max(H)`, floored at `1e-12`.
pub fn lipschitz_bound(h: &RMatrix) -> f64 {
    symmetric_upper_bound(h, 200, 1.1).max(1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqStatus {
    Moved,
    /// No ascent step was found; the expansion point is returned.
    Stationary,
    /// The expansion point violates a covert cap, so no step was attempted.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqStep {
    pub freqs: Vec<f64>,
    pub status: FreqStatus,
    /// Curvature used for the accepted step (normalized units).
    pub nu: f64,
}

/// One SCA step from `f_p`: maximise the separable concave minorant of `g̃`
/// subject to quadratic majorants of every `ĝ_k` and the box.
pub fn sca_freq_step(f_p: &[f64], ctx: &FreqContext<'_>, opts: &SolverOptions) -> Result<FreqStep> {
    check_freqs(ctx, f_p)?;
    let n = f_p.len();
    let stay = |status| FreqStep { freqs: f_p.to_vec(), status, nu: f64::NAN };

    let bob_terms = ctx.terms(&ctx.bob(), f_p);
    let g0 = bob_terms.s.norm_sqr();
    let peak = ctx.h_hat.iter().map(|z| z.norm()).sum::<f64>().powi(2);
    if peak == 0.0 {
        return Ok(stay(FreqStatus::Stationary));
    }
    let bob_scale = peak * (ctx.chan.rho_rb * (ctx.chan.beta1 + ctx.chan.beta2)).powi(2);
    let grad = bob_terms.gradient() * (MHZ / bob_scale);
    let mut nu = lipschitz_bound(&(bob_terms.hessian() * (MHZ * MHZ / bob_scale)));

    let mut wardens = Vec::with_capacity(ctx.caps.len());
    for k in 0..ctx.caps.len() {
        let t = ctx.terms(&ctx.warden(k), f_p);
        let val = t.s.norm_sqr() / peak;
        let cap = ctx.caps[k] / peak;
        if val > cap {
            return Ok(stay(FreqStatus::Infeasible));
        }
        let gk = t.gradient() * (MHZ / peak);
        let nuk = lipschitz_bound(&(t.hessian() * (MHZ * MHZ / peak)));
        wardens.push((val, cap, gk, nuk));
    }

    let x_p = RVector::from_iterator(n, f_p.iter().map(|f| f / MHZ));
    let anchor = CVector::from_iterator(n, x_p.iter().map(|x| Complex64::new(*x, 0.0)));
    let bounds = BoxBounds { lo: vec![ctx.f_min / MHZ; n], hi: vec![ctx.f_max / MHZ; n] };
    let cqp_opts = CqpOptions { lipschitz: None, ..opts.cqp };
    for _ in 0..opts.sca_backtracks {
        let balls = wardens
            .iter()
            .map(|(val, cap, gk, nuk)| {
                let r2 = 2.0 * (cap - val) / nuk + gk.norm_squared() / (nuk * nuk);
                let center = CVector::from_iterator(n, x_p.iter().zip(gk.iter()).map(|(x, g)| Complex64::new(x - g / nuk, 0.0)));
                Ball { center, radius: r2.max(0.0).sqrt().max(f64::MIN_POSITIVE) }
            })
            .collect();
        let set = FeasibleSet { balls, slabs: vec![], bounds: Some(bounds.clone()), anchor: Some(anchor.clone()) };
        let target = CVector::from_iterator(n, x_p.iter().zip(grad.iter()).map(|(x, g)| Complex64::new(x + g / nu, 0.0)));
        let obj = ConcaveQuadratic {
            quad: CMatrix::identity(n, n) * Complex64::new(0.5 * nu, 0.0),
            lin: target * Complex64::new(0.5 * nu, 0.0),
            offset: 0.0,
        };
        let sol = maximize(&obj, &set, &anchor, &CqpOptions { lipschitz: Some(0.5 * nu), ..cqp_opts })?;
        let cand: Vec<f64> = sol.x.iter().map(|z| (z.re * MHZ).clamp(ctx.f_min, ctx.f_max)).collect();
        let ascent = ctx.bob_gain(&cand) >= g0;
        let covert = (0..ctx.caps.len()).all(|k| ctx.warden_gain(k, &cand) <= ctx.caps[k]);
        if ascent && covert {
            let moved = cand.iter().zip(f_p).any(|(a, b)| a != b);
            return Ok(FreqStep {
                freqs: cand,
                status: if moved { FreqStatus::Moved } else { FreqStatus::Stationary },
                nu,
            });
        }
        nu *= 2.0;
        for w in wardens.iter_mut() {
            w.3 *= 2.0;
        }
    }
    Ok(stay(FreqStatus::Stationary))
}
