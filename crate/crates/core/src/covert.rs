//! Covertness metrics: detection error probability under log-uniform noise
//! uncertainty, the warden's optimal threshold, the covert power budget, the
//! log-MGF surrogate of the warden's received power and Bob's rate.
//!
//! All powers are in watts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, RisGeometry};
use crate::error::{Error, Result};
use crate::surface::{cascade_vector, effective_gain};
use crate::CVector;

/// Relative scale of the floor that replaces a non-positive `h_k`: the
/// covert right-hand side becomes `EPS_ZERO_SCALE * P_t * ρ²(d_rwk)`.
pub const EPS_ZERO_SCALE: f64 = 1e-12;

/// Tolerance of the post-hoc covert audit, relative to the largest
/// `|μ_k|²` any unit-modulus configuration can produce.
pub const AUDIT_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertConfig {
    /// Noise uncertainty factor ς > 1.
    pub varsigma: f64,
    /// Covert requirement ξ ∈ (0, 1).
    pub xi: f64,
    /// Penalty exponent ψ ≥ 0.
    pub psi: f64,
    /// Nominal warden noise powers σ̂²_wk.
    pub sigma2_w: Vec<f64>,
    /// Bob's noise power σ²_b.
    pub sigma2_b: f64,
    /// Transmit power P_t.
    pub p_t: f64,
}

impl CovertConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.varsigma > 1.0 && self.varsigma.is_finite()) {
            return Err(Error::invalid("varsigma", "noise uncertainty must exceed 1"));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::invalid("xi", "covert requirement must lie in (0, 1)"));
        }
        if !(self.psi >= 0.0 && self.psi.is_finite()) {
            return Err(Error::invalid("psi", "penalty exponent must be >= 0"));
        }
        if self.sigma2_w.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("sigma2_w", "noise powers must be positive"));
        }
        if !(self.sigma2_b > 0.0) {
            return Err(Error::invalid("sigma2_b", "noise power must be positive"));
        }
        if !(self.p_t >= 0.0 && self.p_t.is_finite()) {
            return Err(Error::invalid("p_t", "transmit power must be >= 0"));
        }
        Ok(())
    }

    fn nominal(&self, k: usize) -> f64 {
        self.sigma2_w[k]
    }
}

/// Detection error probability of Willie `k` at threshold `tau` given the
/// received covert power `omega`.
pub fn dep(tau: f64, omega: f64, cfg: &CovertConfig, k: usize) -> Result<f64> {
    let s = cfg.nominal(k);
    let (lo, hi) = (s / cfg.varsigma, s * cfg.varsigma);
    let slack = 1e-12 * hi;
    if !(tau >= lo - slack && tau <= hi + slack) {
        return Err(Error::ThresholdOutOfRange { tau, lo, hi });
    }
    if !(omega >= 0.0) {
        return Err(Error::invalid("omega", "received power must be >= 0"));
    }
    let lower = (tau - omega).max(lo);
    let p = 1.0 - (tau.ln() - lower.ln()) / (2.0 * cfg.varsigma.ln());
    Ok(p.clamp(0.0, 1.0))
}

/// Warden's DEP-minimising threshold `min{ω + σ̂²/ς, ς σ̂²}`.
pub fn optimal_threshold(omega: f64, cfg: &CovertConfig, k: usize) -> f64 {
    let s = cfg.nominal(k);
    (omega + s / cfg.varsigma).min(cfg.varsigma * s)
}

/// DEP at the optimal threshold.
pub fn optimal_dep(omega: f64, cfg: &CovertConfig, k: usize) -> f64 {
    let s = cfg.nominal(k);
    let v = cfg.varsigma;
    if omega <= (v * v - 1.0) * s / v {
        (1.0 - (1.0 + v * omega / s).ln() / (2.0 * v.ln())).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Largest `ω` keeping the optimal DEP at or above `1 - ξ`:
/// `(ς^{2ξ} - 1) σ̂² / ς`.
pub fn covert_power_budget(cfg: &CovertConfig, k: usize) -> f64 {
    let v = cfg.varsigma;
    (v.powf(2.0 * cfg.xi) - 1.0) * cfg.nominal(k) / v
}

/// Statistics of Willie `k`'s received covert signal `X ~ CN(μ, σ̃²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WardenStats {
    pub mu: Complex64,
    pub sigma_tilde2: f64,
    /// `P_t |h_rwk^H Θ Θ0 h_ar|²` for the stored NLoS draw.
    pub omega_det: f64,
}

/// Computes `μ_k`, `σ̃²_k` and the realized `ω_k` for beam `theta_vec`
/// (`v = diag(Θ*)`) at modulation frequencies `freqs`.
pub fn warden_stats(
    theta_vec: &CVector,
    freqs: &[f64],
    chan: &ChannelRealization,
    geom: &RisGeometry,
    cfg: &CovertConfig,
    k: usize,
) -> Result<WardenStats> {
    let los = chan.h_rw_los(geom, k, freqs)?;
    let rho = chan.rho_rwk[k];
    let sqrt_p = cfg.p_t.sqrt();
    let mu = effective_gain(theta_vec, &los, &chan.h_ar, geom)? * (sqrt_p * rho * chan.beta1);
    let full = chan.h_rw(geom, k, freqs)?;
    let omega_det = cfg.p_t * effective_gain(theta_vec, &full, &chan.h_ar, geom)?.norm_sqr();
    Ok(WardenStats {
        mu,
        sigma_tilde2: sigma_tilde2(chan, geom, cfg, k),
        omega_det,
    })
}

/// `σ̃²_k = P_t ρ²(d_rwk) β2² A0² ‖h_ar‖²`; independent of the beam because
/// every entry of `Θ` has unit modulus.
pub fn sigma_tilde2(chan: &ChannelRealization, geom: &RisGeometry, cfg: &CovertConfig, k: usize) -> f64 {
    let rho = chan.rho_rwk[k];
    cfg.p_t * rho * rho * chan.beta2 * chan.beta2 * geom.a0 * geom.a0 * chan.h_ar.norm_squared()
}

/// `(1/ψ) ln E[e^{ψ|X|²}] = |μ|²/(1 - ψσ̃²) - ln(1 - ψσ̃²)/ψ`, with the
/// `ψ → 0` limit `|μ|² + σ̃²`.
pub fn log_mgf(stats: &WardenStats, psi: f64) -> Result<f64> {
    if !(psi >= 0.0) {
        return Err(Error::invalid("psi", "penalty exponent must be >= 0"));
    }
    let mu2 = stats.mu.norm_sqr();
    let x = psi * stats.sigma_tilde2;
    if x >= 1.0 {
        return Err(Error::MgfDomain { product: x });
    }
    if x < 1e-8 {
        // Series of -ln(1-x)/ψ around x = 0 keeps full precision.
        return Ok(mu2 / (1.0 - x) + stats.sigma_tilde2 * (1.0 + x / 2.0 + x * x / 3.0));
    }
    Ok(mu2 / (1.0 - x) - (-x).ln_1p() / psi)
}

/// Right-hand side of the covert constraint `|μ_k|² ≤ max(0, h_k)` and its
/// normalized form `ι_k` used by the optimizer (`|v^H b_k|² ≤ ι_k` with
/// `b_k = h_rwk^LoS* ∘ Θ0 h_ar`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertRhs {
    pub h_k: f64,
    /// `max(0, h_k)`, or the floor `ε_zero` when `h_k ≤ 0`.
    pub rhs: f64,
    pub iota: f64,
    /// True when `h_k ≤ 0` and the floor is in force.
    pub floored: bool,
}

/// `h_k = (1 - ψσ̃²)(budget + ln(1 - ψσ̃²)/ψ)` and the derived `ι_k`; the
/// `ψ → 0` limit is `budget - σ̃²`.
pub fn covert_rhs(
    stats: &WardenStats,
    chan: &ChannelRealization,
    cfg: &CovertConfig,
    k: usize,
) -> Result<CovertRhs> {
    let x = cfg.psi * stats.sigma_tilde2;
    if x >= 1.0 {
        return Err(Error::MgfDomain { product: x });
    }
    let log_term = if x < 1e-8 {
        -stats.sigma_tilde2 * (1.0 + x / 2.0 + x * x / 3.0)
    } else {
        (-x).ln_1p() / cfg.psi
    };
    let h_k = (1.0 - x) * (covert_power_budget(cfg, k) + log_term);
    let rho = chan.rho_rwk[k];
    let scale = cfg.p_t * rho * rho;
    let (rhs, floored) = if h_k > 0.0 {
        (h_k, false)
    } else {
        (EPS_ZERO_SCALE * scale, true)
    };
    Ok(CovertRhs {
        h_k,
        rhs,
        iota: rhs / (scale * chan.beta1 * chan.beta1),
        floored,
    })
}

/// Bob's achievable rate `log2(1 + P_t |h_rb^H Θ Θ0 h_ar|² / σ²_b)`.
pub fn rate_bob(
    theta_vec: &CVector,
    freqs: &[f64],
    chan: &ChannelRealization,
    geom: &RisGeometry,
    cfg: &CovertConfig,
) -> Result<f64> {
    let h_rb = chan.h_rb(geom, freqs)?;
    let gain = effective_gain(theta_vec, &h_rb, &chan.h_ar, geom)?;
    Ok((1.0 + cfg.p_t * gain.norm_sqr() / cfg.sigma2_b).log2())
}

/// Independent re-evaluation of one warden's covert constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WardenAudit {
    pub mu2: f64,
    pub rhs: f64,
    pub h_k: f64,
    pub budget: f64,
    pub omega_tilde: f64,
    /// `max(0, |μ|² - rhs)` relative to the largest achievable `|μ|²`.
    pub rel_violation: f64,
}

impl WardenAudit {
    pub fn passes(&self) -> bool {
        self.rel_violation <= AUDIT_REL_TOL
    }
}

/// Recomputes every covert constraint from scratch for a candidate beam.
pub fn audit(
    theta_vec: &CVector,
    freqs: &[f64],
    chan: &ChannelRealization,
    geom: &RisGeometry,
    cfg: &CovertConfig,
) -> Result<Vec<WardenAudit>> {
    let incident = chan.incident(geom);
    (0..chan.num_wardens())
        .map(|k| {
            let stats = warden_stats(theta_vec, freqs, chan, geom, cfg, k)?;
            let rhs = covert_rhs(&stats, chan, cfg, k)?;
            let los = chan.h_rw_los(geom, k, freqs)?;
            let b = cascade_vector(&los, &incident)?;
            let rho = chan.rho_rwk[k];
            let peak = cfg.p_t * rho * rho * chan.beta1 * chan.beta1 * b.iter().map(|z| z.norm()).sum::<f64>().powi(2);
            let mu2 = stats.mu.norm_sqr();
            Ok(WardenAudit {
                mu2,
                rhs: rhs.rhs,
                h_k: rhs.h_k,
                budget: covert_power_budget(cfg, k),
                omega_tilde: log_mgf(&stats, cfg.psi)?,
                rel_violation: if peak > 0.0 { (mu2 - rhs.rhs).max(0.0) / peak } else { 0.0 },
            })
        })
        .collect()
}

/// Per-solution metrics emitted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    pub rate_bpcu: f64,
    pub omega_tilde: Vec<f64>,
    pub h_k: Vec<f64>,
    pub budget: Vec<f64>,
    pub feasible: bool,
}

impl SolutionMetrics {
    pub fn evaluate(
        theta_vec: &CVector,
        freqs: &[f64],
        chan: &ChannelRealization,
        geom: &RisGeometry,
        cfg: &CovertConfig,
    ) -> Result<Self> {
        let audits = audit(theta_vec, freqs, chan, geom, cfg)?;
        Ok(Self {
            rate_bpcu: rate_bob(theta_vec, freqs, chan, geom, cfg)?,
            omega_tilde: audits.iter().map(|a| a.omega_tilde).collect(),
            h_k: audits.iter().map(|a| a.h_k).collect(),
            budget: audits.iter().map(|a| a.budget).collect(),
            feasible: audits.iter().all(WardenAudit::passes),
        })
    }
}
