//! Penalty dual decomposition for the unit-modulus reflection design.

use num_complex::Complex64;

use super::SolverOptions;
use crate::cqp::{maximize, project_intersection, Ball, ConcaveQuadratic, CqpOptions, FeasibleSet, ProjectionOptions, Slab};
use crate::error::{check_len, Error, Result};
use crate::linalg::hermitian_upper_bound;
use crate::{CMatrix, CVector};

/// Multipliers and penalty of the augmented Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub struct PddState {
    pub lambda: CVector,
    pub rho_pen: f64,
    pub xi_scale: f64,
    pub d_residual: f64,
    pub eps_track: f64,
}

impl PddState {
    pub fn new(n: usize, rho_pen: f64, xi_scale: f64) -> Result<Self> {
        if !(rho_pen > 0.0) {
            return Err(Error::invalid("rho_pen", "penalty must be positive"));
        }
        if !(xi_scale > 0.0 && xi_scale < 1.0) {
            return Err(Error::invalid("xi_scale", "scaling must lie in (0, 1)"));
        }
        Ok(Self {
            lambda: CVector::zeros(n),
            rho_pen,
            xi_scale,
            d_residual: f64::INFINITY,
            eps_track: f64::INFINITY,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PddOutcome {
    /// Unit-modulus solution.
    pub theta_vec: CVector,
    pub state: PddState,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// `‖ϑ - ϑ̂‖ ≤ ε̃` and every `||ϑ_l| - 1| ≤ 1e-6` were reached.
    pub converged: bool,
    /// Largest modulus error of `ϑ` before renormalization.
    pub modulus_error: f64,
    /// Every slab holds at the returned point.
    pub feasible: bool,
    /// Surrogate objective at the returned point.
    pub objective: f64,
}

/// Unit-modulus projection `e^{j∠x}`, entrywise; zeros map to `fallback`.
pub fn phase_align(x: &CVector, fallback: &CVector) -> CVector {
    x.zip_map(fallback, |z, f| {
        let n = z.norm();
        if n > 0.0 {
            z / n
        } else {
            f
        }
    })
}

fn normalized_slabs(slabs: &[Slab], margin: f64) -> Result<Vec<Slab>> {
    slabs
        .iter()
        .map(|s| {
            let n2 = s.b.norm_squared();
            if n2 == 0.0 {
                return Err(Error::ZeroDirection);
            }
            if !(s.cap >= 0.0) {
                return Err(Error::invalid("cap", "slab cap must be >= 0"));
            }
            let n = n2.sqrt();
            Ok(Slab { b: &s.b / Complex64::new(n, 0.0), cap: s.cap / n2 * (1.0 - margin) })
        })
        .collect()
}

/// Largest violation `max(0, |b^H x|² - cap) / (Σ|b_l|)²` over the slabs.
pub fn slab_violation(x: &CVector, slabs: &[Slab]) -> f64 {
    slabs
        .iter()
        .map(|s| {
            let peak = s.b.iter().map(|z| z.norm()).sum::<f64>().powi(2);
            if peak == 0.0 {
                0.0
            } else {
                (s.b.dotc(x).norm_sqr() - s.cap).max(0.0) / peak
            }
        })
        .fold(0.0, f64::max)
}

fn slabs_hold(x: &CVector, slabs: &[Slab]) -> bool {
    slabs.iter().all(|s| s.b.dotc(x).norm_sqr() <= s.cap)
}

/// Solves `max obj(ϑ)` s.t. `|ϑ_l| = 1`, `|b_k^H ϑ|² ≤ cap_k` with the PDD
/// framework, warm-started at `start`.
pub fn pdd_solve(obj: &ConcaveQuadratic, slabs: &[Slab], start: &CVector, opts: &SolverOptions) -> Result<PddOutcome> {
    let state = PddState::new(obj.dim(), opts.rho_pen, opts.xi_scale)?;
    pdd_solve_from(obj, slabs, start, state, opts)
}

/// [`pdd_solve`] continuing from an existing multiplier and penalty state.
pub fn pdd_solve_from(
    obj: &ConcaveQuadratic,
    slabs: &[Slab],
    start: &CVector,
    mut state: PddState,
    opts: &SolverOptions,
) -> Result<PddOutcome> {
    let n = obj.dim();
    check_len(n, state.lambda.len())?;
    check_len(n, start.len())?;
    for s in slabs {
        check_len(n, s.b.len())?;
    }
    let ones = CVector::from_element(n, Complex64::new(1.0, 0.0));
    let work_slabs = normalized_slabs(slabs, opts.cap_margin)?;
    let unit_slabs = normalized_slabs(slabs, 0.0)?;
    let set = FeasibleSet {
        balls: vec![Ball { center: CVector::zeros(n), radius: (n as f64).sqrt() }],
        slabs: work_slabs,
        bounds: None,
        anchor: Some(CVector::zeros(n)),
    };
    let curvature = hermitian_upper_bound(&obj.quad, 50, 1.05);

    let mut theta_hat = phase_align(start, &ones);
    let mut theta = theta_hat.clone();
    let mut converged = false;
    let mut outer = 0;
    let mut inner_total = 0;
    let mut modulus_error = f64::INFINITY;
    while outer < opts.max_pdd {
        outer += 1;
        let rho = state.rho_pen;
        let penalty = 1.0 / (2.0 * rho);
        let quad: CMatrix = &obj.quad + CMatrix::identity(n, n) * Complex64::new(penalty, 0.0);
        let cqp_opts = CqpOptions { lipschitz: Some(curvature + penalty), ..opts.cqp };
        let mut prev = f64::NAN;
        for _ in 0..opts.max_inner {
            inner_total += 1;
            let lin = &obj.lin + (&theta_hat - &state.lambda * Complex64::new(rho, 0.0)) * Complex64::new(penalty, 0.0);
            let sub = ConcaveQuadratic { quad: quad.clone(), lin, offset: 0.0 };
            theta = maximize(&sub, &set, &theta, &cqp_opts)?.x;
            theta_hat = phase_align(&(&theta + &state.lambda * Complex64::new(rho, 0.0)), &theta_hat);
            let gap = &theta - &theta_hat + &state.lambda * Complex64::new(rho, 0.0);
            let value = obj.value(&theta) - gap.norm_squared() * penalty;
            if (value - prev).abs() <= opts.inner_tol * value.abs().max(1e-12) {
                break;
            }
            prev = value;
        }
        let diff = &theta - &theta_hat;
        let d = diff.norm();
        if d <= state.eps_track {
            state.lambda += diff / Complex64::new(rho, 0.0);
        } else {
            state.rho_pen *= state.xi_scale;
        }
        state.eps_track = 0.9 * d;
        state.d_residual = d;
        modulus_error = theta.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
        if d <= opts.eps_pdd && modulus_error <= opts.modulus_tol {
            converged = true;
            break;
        }
    }

    let mut out = phase_align(&theta, &theta_hat);
    let mut feasible = slabs_hold(&out, &unit_slabs);
    if !feasible {
        // Alternate between the convex slab set and the unit-modulus torus.
        let proj_opts = ProjectionOptions { iters: 500, ..opts.cqp.projection };
        for _ in 0..opts.polish_rounds {
            let p = project_intersection(&out, &set, &proj_opts).point;
            out = phase_align(&p, &out);
            if slabs_hold(&out, &unit_slabs) {
                feasible = true;
                break;
            }
        }
    }
    Ok(PddOutcome {
        objective: obj.value(&out),
        theta_vec: out,
        state,
        outer_iters: outer,
        inner_iters: inner_total,
        converged,
        modulus_error,
        feasible,
    })
}
