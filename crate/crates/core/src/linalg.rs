//! Power iteration for the dominant eigenvalue of small Hermitian and real
//! symmetric matrices.

use num_complex::Complex64;

use crate::{CMatrix, CVector, RMatrix, RVector};

/// Outcome of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    /// Largest eigenvalue magnitude found (Rayleigh quotient of the last iterate).
    pub value: f64,
    /// Whether the relative change of the estimate dropped below `1e-6`.
    pub converged: bool,
}

// Deterministic start vector with no special alignment to structured
// eigenvectors such as the all-ones or canonical directions.
fn start_real(n: usize) -> RVector {
    let mut v = RVector::from_iterator(n, (0..n).map(|i| 1.0 + 0.37 * ((i as f64 + 1.0) * 1.618_033_988_7).sin()));
    let norm = v.norm();
    v /= norm;
    v
}

fn start_complex(n: usize) -> CVector {
    let r = start_real(n);
    CVector::from_iterator(
        n,
        r.iter().enumerate().map(|(i, x)| Complex64::from_polar(*x, 0.7 * i as f64)),
    )
}

/// Largest eigenvalue magnitude `|λ|_max` of a Hermitian matrix.
pub fn hermitian_power(q: &CMatrix, iters: usize) -> PowerEstimate {
    let n = q.nrows();
    if n == 0 {
        return PowerEstimate { value: 0.0, converged: true };
    }
    let mut v = start_complex(n);
    let mut est = 0.0;
    let mut converged = false;
    for _ in 0..iters.max(1) {
        let w = q * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return PowerEstimate { value: 0.0, converged: true };
        }
        let next = norm;
        v = w.unscale(norm);
        if (next - est).abs() <= 1e-6 * next {
            est = next;
            converged = true;
            break;
        }
        est = next;
    }
    PowerEstimate { value: est, converged }
}

/// Largest eigenvalue magnitude of a real symmetric matrix.
pub fn symmetric_power(h: &RMatrix, iters: usize) -> PowerEstimate {
    let n = h.nrows();
    if n == 0 {
        return PowerEstimate { value: 0.0, converged: true };
    }
    let mut v = start_real(n);
    let mut est = 0.0;
    let mut converged = false;
    for _ in 0..iters.max(1) {
        let w = h * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return PowerEstimate { value: 0.0, converged: true };
        }
        v = w / norm;
        if (norm - est).abs() <= 1e-6 * norm {
            est = norm;
            converged = true;
            break;
        }
        est = norm;
    }
    PowerEstimate { value: est, converged }
}

/// Upper estimate of `λ_max` for a Hermitian PSD matrix: power iteration
/// times `safety`, falling back to the Frobenius norm when the iteration
/// has not settled.
pub fn hermitian_upper_bound(q: &CMatrix, iters: usize, safety: f64) -> f64 {
    let est = hermitian_power(q, iters);
    let frob = q.norm();
    if est.converged {
        (est.value * safety).min(frob.max(est.value))
    } else {
        frob
    }
}

/// Same as [`hermitian_upper_bound`] for real symmetric matrices.
pub fn symmetric_upper_bound(h: &RMatrix, iters: usize, safety: f64) -> f64 {
    let est = symmetric_power(h, iters);
    let frob = h.norm();
    if est.converged {
        (est.value * safety).min(frob.max(est.value))
    } else {
        frob
    }
}
