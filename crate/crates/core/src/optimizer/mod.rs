//! Alternating design of the surface reflection vector (MMSE + PDD) and the
//! modulation frequencies (SCA).

mod alternate;
mod frequency;
mod mmse;
mod pdd;

pub use alternate::{alternate, bob_aligned, covert_slabs, gain_peaking_frequencies, AlternateResult, DesignSpace, Mode, TraceRow};
pub use frequency::{freq_gradient, freq_hessian, lipschitz_bound, sca_freq_step, FreqContext, FreqStatus, FreqStep};
pub use mmse::{mmse_aux, mse, surrogate_curvature, surrogate_quadratic, weighted_rate, MmseAux};
pub use pdd::{pdd_solve, pdd_solve_from, phase_align, slab_violation, PddOutcome, PddState};

use crate::cqp::CqpOptions;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Outer tolerance on the rate increase, bits per channel use.
    pub eps_outer: f64,
    /// PDD consensus tolerance on `‖ϑ - ϑ̂‖₂`.
    pub eps_pdd: f64,
    pub max_outer: usize,
    pub max_pdd: usize,
    pub max_inner: usize,
    /// Relative objective change that ends one PDD inner alternation.
    pub inner_tol: f64,
    /// Largest `||ϑ_l| - 1|` accepted at PDD termination.
    pub modulus_tol: f64,
    pub rho_pen: f64,
    pub xi_scale: f64,
    /// Relative tightening of the covert caps inside PDD, absorbing the
    /// final unit-modulus renormalization.
    pub cap_margin: f64,
    pub polish_rounds: usize,
    /// Curvature doublings tried by one SCA step before giving up.
    pub sca_backtracks: usize,
    pub cqp: CqpOptions,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps_outer: 1e-3,
            eps_pdd: 1e-3,
            max_outer: 50,
            max_pdd: 200,
            max_inner: 100,
            inner_tol: 1e-6,
            modulus_tol: 1e-6,
            rho_pen: 100.0,
            xi_scale: 0.5,
            cap_margin: 1e-4,
            polish_rounds: 50,
            sca_backtracks: 30,
            cqp: CqpOptions::default(),
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_outer", self.eps_outer),
            ("eps_pdd", self.eps_pdd),
            ("inner_tol", self.inner_tol),
            ("modulus_tol", self.modulus_tol),
            ("rho_pen", self.rho_pen),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.max_outer == 0 || self.max_pdd == 0 || self.max_inner == 0 {
            return Err(Error::invalid("iteration caps", "must be at least 1"));
        }
        if !(self.xi_scale > 0.0 && self.xi_scale < 1.0) {
            return Err(Error::invalid("xi_scale", "must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.cap_margin) {
            return Err(Error::invalid("cap_margin", "must lie in [0, 1)"));
        }
        Ok(())
    }
}
