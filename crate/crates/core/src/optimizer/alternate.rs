//! Outer alternation between the reflection vector and the modulation
//! frequencies.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frequency::{sca_freq_step, FreqContext};
use super::mmse::{mmse_aux, surrogate_quadratic};
use super::pdd::{pdd_solve_from, phase_align, slab_violation, PddOutcome, PddState};
use super::SolverOptions;
use crate::channel::{ChannelRealization, RisGeometry};
use crate::covert::{covert_rhs, rate_bob, sigma_tilde2, CovertConfig, WardenStats};
use crate::cqp::Slab;
use crate::error::{Error, Result};
use crate::surface::{cascade_vector, linear_frequencies, BeamState};
use crate::CVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Joint delay and modulation-frequency design.
    FdRis,
    /// Conventional RIS: all modulation frequencies pinned to zero, only the
    /// reflection phases are designed.
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpace {
    pub f_min: f64,
    pub f_max: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub rate_bpcu: f64,
    pub pdd_residual: f64,
    pub max_covert_violation: f64,
    pub rho_pen: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternateResult {
    pub state: BeamState,
    pub rate: f64,
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    pub converged: bool,
    /// The Bob-aligned start violated a covert cap and was repaired.
    pub restored: bool,
}

/// Rank-one covert constraints `|b_k^H v|² ≤ ι_k` at frequencies `freqs`.
pub fn covert_slabs(chan: &ChannelRealization, geom: &RisGeometry, cfg: &CovertConfig, freqs: &[f64]) -> Result<Vec<Slab>> {
    let incident = chan.incident(geom);
    (0..chan.num_wardens())
        .map(|k| {
            let stats = WardenStats {
                mu: Complex64::new(0.0, 0.0),
                sigma_tilde2: sigma_tilde2(chan, geom, cfg, k),
                omega_det: 0.0,
            };
            let rhs = covert_rhs(&stats, chan, cfg, k)?;
            let b = cascade_vector(&chan.h_rw_los(geom, k, freqs)?, &incident)?;
            Ok(Slab { b, cap: rhs.iota })
        })
        .collect()
}

/// Reflection vector maximising `|v^H h̃|` for Bob's full channel.
pub fn bob_aligned(chan: &ChannelRealization, geom: &RisGeometry, freqs: &[f64]) -> Result<CVector> {
    let h_tilde = cascade_vector(&chan.h_rb(geom, freqs)?, &chan.incident(geom))?;
    let ones = CVector::from_element(h_tilde.len(), Complex64::new(1.0, 0.0));
    Ok(phase_align(&h_tilde, &ones))
}

fn slabs_hold(v: &CVector, slabs: &[Slab]) -> bool {
    slabs.iter().all(|s| s.b.dotc(v).norm_sqr() <= s.cap)
}

fn pdd_step(
    chan: &ChannelRealization,
    geom: &RisGeometry,
    cfg: &CovertConfig,
    freqs: &[f64],
    slabs: &[Slab],
    start: &CVector,
    rho_pen: f64,
    opts: &SolverOptions,
) -> Result<PddOutcome> {
    let h_tilde = cascade_vector(&chan.h_rb(geom, freqs)?, &chan.incident(geom))?;
    let aux = mmse_aux(start, &h_tilde, cfg.p_t, cfg.sigma2_b);
    let obj = surrogate_quadratic(&aux, &h_tilde, cfg.p_t, cfg.sigma2_b)?;
    let state = PddState::new(start.len(), rho_pen, opts.xi_scale)?;
    pdd_solve_from(&obj, slabs, start, state, opts)
}

fn restore(
    chan: &ChannelRealization,
    geom: &RisGeometry,
    cfg: &CovertConfig,
    freqs: &[f64],
    slabs: &[Slab],
    start: &CVector,
    opts: &SolverOptions,
) -> Result<PddOutcome> {
    let first = pdd_step(chan, geom, cfg, freqs, slabs, start, opts.rho_pen, opts)?;
    if first.feasible {
        return Ok(first);
    }
    let mut worst = slab_violation(&first.theta_vec, slabs);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..4 {
        let random = CVector::from_iterator(
            start.len(),
            (0..start.len()).map(|_| Complex64::cis(rng.random_range(0.0..std::f64::consts::TAU))),
        );
        let out = pdd_step(chan, geom, cfg, freqs, slabs, &random, opts.rho_pen, opts)?;
        if out.feasible {
            return Ok(out);
        }
        worst = worst.min(slab_violation(&out.theta_vec, slabs));
    }
    Err(Error::InfeasibleStart { violation: worst })
}

fn make_state(theta_vec: CVector, freqs: Vec<f64>, geom: &RisGeometry, mode: Mode) -> Result<BeamState> {
    match mode {
        Mode::FdRis => BeamState::from_theta_vec(theta_vec, freqs, geom.g),
        Mode::Conventional => {
            let n = theta_vec.len();
            Ok(BeamState { theta_vec, freqs, delays: vec![0.0; n] })
        }
    }
}

/// Alternating maximisation of Bob's rate under the covert constraints.
///
/// Each round runs MMSE + PDD on the reflection vector and, in FD-RIS mode,
/// one SCA step on the frequencies. A candidate is only accepted when it
/// keeps every covert constraint and does not lower the rate, so the
/// returned trace is non-decreasing.
///
/// In FD-RIS mode the alternation is started from a linear frequency ramp and
/// from [`gain_peaking_frequencies`]; the better feasible result is returned.
pub fn alternate(
    chan: &ChannelRealization,
    geom: &RisGeometry,
    cfg: &CovertConfig,
    space: &DesignSpace,
    opts: &SolverOptions,
) -> Result<AlternateResult> {
    opts.validate()?;
    cfg.validate()?;
    let n = chan.num_elements();
    let starts = match space.mode {
        Mode::FdRis => vec![
            linear_frequencies(n, space.f_min, space.f_max),
            gain_peaking_frequencies(chan, geom, space.f_min, space.f_max)?,
        ],
        Mode::Conventional => vec![vec![0.0; n]],
    };
    let mut best: Option<AlternateResult> = None;
    let mut first_err = None;
    for freqs in starts {
        match alternate_from(chan, geom, cfg, space, opts, freqs) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.rate > b.rate) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(r), _) => Ok(r),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one start is always tried"),
    }
}

/// Per-element frequency on a uniform grid over `[f_min, f_max]` that
/// maximises `|h̃_l|`, i.e. where the line-of-sight term of Bob's link adds
/// constructively to the scattered part.
pub fn gain_peaking_frequencies(chan: &ChannelRealization, geom: &RisGeometry, f_min: f64, f_max: f64) -> Result<Vec<f64>> {
    const GRID: usize = 257;
    let n = chan.num_elements();
    let mut best = vec![(f64::NEG_INFINITY, f_min); n];
    for i in 0..GRID {
        let f = if f_max > f_min { f_min + (f_max - f_min) * i as f64 / (GRID - 1) as f64 } else { f_min };
        let h = chan.h_rb(geom, &vec![f; n])?;
        for (slot, hl) in best.iter_mut().zip(h.iter()) {
            if hl.norm() > slot.0 {
                *slot = (hl.norm(), f);
            }
        }
    }
    Ok(best.into_iter().map(|(_, f)| f).collect())
}

fn alternate_from(
    chan: &ChannelRealization,
    geom: &RisGeometry,
    cfg: &CovertConfig,
    space: &DesignSpace,
    opts: &SolverOptions,
    mut freqs: Vec<f64>,
) -> Result<AlternateResult> {
    let mut slabs = covert_slabs(chan, geom, cfg, &freqs)?;
    let mut theta = bob_aligned(chan, geom, &freqs)?;
    let mut restored = false;
    let mut pdd_residual = 0.0;
    let mut rho_pen = opts.rho_pen;
    if !slabs_hold(&theta, &slabs) {
        let out = restore(chan, geom, cfg, &freqs, &slabs, &theta, opts)?;
        theta = out.theta_vec;
        pdd_residual = out.state.d_residual;
        rho_pen = out.state.rho_pen;
        restored = true;
    }
    let mut rate = rate_bob(&theta, &freqs, chan, geom, cfg)?;
    let mut trace = vec![TraceRow {
        iter: 0,
        rate_bpcu: rate,
        pdd_residual,
        max_covert_violation: slab_violation(&theta, &slabs),
        rho_pen,
    }];

    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_outer {
        iterations += 1;
        let out = pdd_step(chan, geom, cfg, &freqs, &slabs, &theta, rho_pen, opts)?;
        if out.feasible && slabs_hold(&out.theta_vec, &slabs) {
            let r = rate_bob(&out.theta_vec, &freqs, chan, geom, cfg)?;
            if r >= rate {
                theta = out.theta_vec.clone();
                rate = r;
            }
        }
        if space.mode == Mode::FdRis {
            let caps: Vec<f64> = slabs.iter().map(|s| s.cap).collect();
            let ctx = FreqContext::new(geom, chan, &theta, caps, space.f_min, space.f_max)?;
            let step = sca_freq_step(&freqs, &ctx, opts)?;
            let cand_slabs = covert_slabs(chan, geom, cfg, &step.freqs)?;
            if slabs_hold(&theta, &cand_slabs) {
                let r = rate_bob(&theta, &step.freqs, chan, geom, cfg)?;
                if r >= rate {
                    freqs = step.freqs;
                    slabs = cand_slabs;
                    rate = r;
                }
            }
        }
        let prev = trace.last().map(|t| t.rate_bpcu).unwrap_or(rate);
        trace.push(TraceRow {
            iter: iterations,
            rate_bpcu: rate,
            pdd_residual: out.state.d_residual,
            max_covert_violation: slab_violation(&theta, &slabs),
            rho_pen: out.state.rho_pen,
        });
        // The next surrogate is close to this one, so keep the penalty level.
        rho_pen = out.state.rho_pen;
        if rate - prev <= opts.eps_outer {
            converged = true;
            break;
        }
    }
    let state = make_state(theta, freqs, geom, space.mode)?;
    Ok(AlternateResult { state, rate, trace, iterations, converged, restored })
}
