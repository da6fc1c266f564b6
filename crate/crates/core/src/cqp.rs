//! Maximisation of a concave quadratic `-x^H Q x + 2 Re(x^H q) + c` over the
//! intersection of Euclidean balls, rank-one slabs `|b^H x|² ≤ cap` and a
//! real box.
//!
//! The engine is accelerated projected gradient with function-value restart;
//! projections onto the intersection use Dykstra's algorithm.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::linalg::hermitian_upper_bound;
use crate::{CMatrix, CVector};

/// Objective `-x^H Q x + 2 Re(x^H q) + offset` with `Q` Hermitian PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcaveQuadratic {
    pub quad: CMatrix,
    pub lin: CVector,
    pub offset: f64,
}

impl ConcaveQuadratic {
    pub fn new(quad: CMatrix, lin: CVector, offset: f64) -> Result<Self> {
        if quad.nrows() != quad.ncols() {
            return Err(Error::invalid("quad", "matrix must be square"));
        }
        check_len(quad.nrows(), lin.len())?;
        let herm_err = (&quad - quad.adjoint()).norm();
        if herm_err > 1e-10 * quad.norm().max(1.0) {
            return Err(Error::invalid("quad", "matrix must be Hermitian"));
        }
        Ok(Self { quad, lin, offset })
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn value(&self, x: &CVector) -> f64 {
        let qx = &self.quad * x;
        -x.dotc(&qx).re + 2.0 * x.dotc(&self.lin).re + self.offset
    }

    /// Ascent direction `q - Q x` (half the Wirtinger gradient).
    pub fn ascent(&self, x: &CVector) -> CVector {
        &self.lin - &self.quad * x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: CVector,
    pub radius: f64,
}

/// `{x : |b^H x|² ≤ cap}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub b: CVector,
    pub cap: f64,
}

/// Per-coordinate bounds on the real part; imaginary parts are pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibleSet {
    pub balls: Vec<Ball>,
    pub slabs: Vec<Slab>,
    pub bounds: Option<BoxBounds>,
    /// A point known to lie in the set. When present, residual infeasibility
    /// left by Dykstra is removed by pulling back towards it.
    pub anchor: Option<CVector>,
}

impl FeasibleSet {
    pub fn validate(&self, dim: usize) -> Result<()> {
        for ball in &self.balls {
            check_len(dim, ball.center.len())?;
            if !(ball.radius > 0.0) {
                return Err(Error::invalid("radius", "ball radius must be positive"));
            }
        }
        for slab in &self.slabs {
            check_len(dim, slab.b.len())?;
            if !(slab.cap >= 0.0) {
                return Err(Error::invalid("cap", "slab cap must be >= 0"));
            }
            if slab.b.norm_squared() == 0.0 {
                return Err(Error::ZeroDirection);
            }
        }
        if let Some(bx) = &self.bounds {
            check_len(dim, bx.lo.len())?;
            check_len(dim, bx.hi.len())?;
            if bx.lo.iter().zip(&bx.hi).any(|(l, h)| !(l <= h)) {
                return Err(Error::invalid("bounds", "lower bound exceeds upper bound"));
            }
        }
        if let Some(a) = &self.anchor {
            check_len(dim, a.len())?;
        }
        Ok(())
    }

    fn num_parts(&self) -> usize {
        self.balls.len() + self.slabs.len() + usize::from(self.bounds.is_some())
    }

    fn project_part(&self, i: usize, x: &CVector) -> CVector {
        let nb = self.balls.len();
        let ns = self.slabs.len();
        if i < nb {
            let b = &self.balls[i];
            project_ball(x, &b.center, b.radius)
        } else if i < nb + ns {
            let s = &self.slabs[i - nb];
            project_slab_unchecked(x, &s.b, s.cap)
        } else {
            let bx = self.bounds.as_ref().expect("box part");
            project_box(x, &bx.lo, &bx.hi)
        }
    }

    /// Largest distance from `x` to any single constraint set.
    pub fn residual(&self, x: &CVector) -> f64 {
        let mut r: f64 = 0.0;
        for b in &self.balls {
            r = r.max((x - &b.center).norm() - b.radius);
        }
        for s in &self.slabs {
            let ip = s.b.dotc(x).norm();
            r = r.max((ip - s.cap.sqrt()) / s.b.norm());
        }
        if let Some(bx) = &self.bounds {
            for (l, z) in x.iter().enumerate() {
                r = r.max(bx.lo[l] - z.re).max(z.re - bx.hi[l]).max(z.im.abs());
            }
        }
        r.max(0.0)
    }
}

/// Euclidean projection onto `{x : ‖x - center‖ ≤ radius}`.
pub fn project_ball(x: &CVector, center: &CVector, radius: f64) -> CVector {
    let d = x - center;
    let n = d.norm();
    if n <= radius {
        x.clone()
    } else {
        center + d * Complex64::new(radius / n, 0.0)
    }
}

/// Euclidean projection onto `{x : |b^H x|² ≤ cap}`.
pub fn project_slab(x: &CVector, b: &CVector, cap: f64) -> Result<CVector> {
    check_len(b.len(), x.len())?;
    if b.norm_squared() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    if !(cap >= 0.0) {
        return Err(Error::invalid("cap", "slab cap must be >= 0"));
    }
    Ok(project_slab_unchecked(x, b, cap))
}

fn project_slab_unchecked(x: &CVector, b: &CVector, cap: f64) -> CVector {
    let ip = b.dotc(x);
    let mag = ip.norm();
    let lim = cap.sqrt();
    if mag <= lim {
        return x.clone();
    }
    let phase = if mag > 0.0 { ip / mag } else { Complex64::new(1.0, 0.0) };
    let step = phase * ((mag - lim) / b.norm_squared());
    x - b * step
}

/// Projection onto the box on real parts with zero imaginary parts.
pub fn project_box(x: &CVector, lo: &[f64], hi: &[f64]) -> CVector {
    CVector::from_iterator(
        x.len(),
        x.iter()
            .enumerate()
            .map(|(l, z)| Complex64::new(z.re.clamp(lo[l], hi[l]), 0.0)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub iters: usize,
    pub dist_tol: f64,
    pub feas_tol: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            iters: 200,
            dist_tol: 1e-12,
            feas_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: CVector,
    /// Largest per-constraint violation of `point`.
    pub residual: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Dykstra's alternating projections onto the intersection of all parts.
pub fn project_intersection(x: &CVector, set: &FeasibleSet, opts: &ProjectionOptions) -> Projection {
    let parts = set.num_parts();
    if parts == 0 {
        return Projection { point: x.clone(), residual: 0.0, sweeps: 0, converged: true };
    }
    if parts == 1 {
        let point = set.project_part(0, x);
        return Projection { residual: set.residual(&point), point, sweeps: 1, converged: true };
    }
    if set.residual(x) == 0.0 {
        return Projection { point: x.clone(), residual: 0.0, sweeps: 0, converged: true };
    }
    let n = x.len();
    let mut corr: Vec<CVector> = vec![CVector::zeros(n); parts];
    let mut cur = x.clone();
    let scale = x.norm().max(1.0);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < opts.iters {
        sweeps += 1;
        let mut moved: f64 = 0.0;
        for (i, c) in corr.iter_mut().enumerate() {
            let shifted = &cur + &*c;
            let next = set.project_part(i, &shifted);
            *c = shifted - &next;
            moved = moved.max((&next - &cur).norm());
            cur = next;
        }
        if moved <= opts.dist_tol * scale && set.residual(&cur) <= opts.feas_tol {
            converged = true;
            break;
        }
    }
    let mut residual = set.residual(&cur);
    if residual > opts.feas_tol {
        if let Some(anchor) = &set.anchor {
            cur = pull_back(&cur, anchor, set);
            residual = set.residual(&cur);
        }
    }
    Projection { point: cur, residual, sweeps, converged: converged && residual <= opts.feas_tol }
}

/// Moves `x` along the segment towards the feasible `anchor` until every
/// constraint holds (bisection on the step).
fn pull_back(x: &CVector, anchor: &CVector, set: &FeasibleSet) -> CVector {
    if set.residual(anchor) > 0.0 {
        return x.clone();
    }
    let dir = x - anchor;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = anchor + &dir * Complex64::new(mid, 0.0);
        if set.residual(&p) == 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    anchor + dir * Complex64::new(lo, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqpOptions {
    pub max_iters: usize,
    /// Projected-gradient norm tolerance relative to `max(‖q‖, 1e-300)`.
    pub opt_tol: f64,
    pub projection: ProjectionOptions,
    pub power_iters: usize,
    pub power_safety: f64,
    /// Known upper bound on `λ_max(Q)`; skips the power iteration.
    pub lipschitz: Option<f64>,
}

impl Default for CqpOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            opt_tol: 1e-7,
            projection: ProjectionOptions::default(),
            power_iters: 50,
            power_safety: 1.05,
            lipschitz: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqpStatus {
    Converged,
    IterationLimit,
    /// The final point violates some constraint by more than `feas_tol`.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqpSolution {
    pub x: CVector,
    pub value: f64,
    pub iters: usize,
    pub residual: f64,
    pub status: CqpStatus,
}

/// Accelerated projected-gradient ascent from `start` (projected first).
pub fn maximize(obj: &ConcaveQuadratic, set: &FeasibleSet, start: &CVector, opts: &CqpOptions) -> Result<CqpSolution> {
    let n = obj.dim();
    check_len(n, start.len())?;
    set.validate(n)?;

    let lip = match opts.lipschitz {
        Some(l) => l,
        None => hermitian_upper_bound(&obj.quad, opts.power_iters, opts.power_safety),
    };
    let q_norm = obj.lin.norm();
    // Purely linear objectives still need a finite step; any positive
    // curvature works because the maximiser then sits on the boundary.
    let lip = if lip > 0.0 { lip } else { q_norm.max(1.0) };
    let step = Complex64::new(1.0 / lip, 0.0);
    let tol = opts.opt_tol * q_norm.max(f64::MIN_POSITIVE);

    let proj = |v: &CVector| project_intersection(v, set, &opts.projection).point;
    let mut x = proj(start);
    let mut fx = obj.value(&x);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut status = CqpStatus::IterationLimit;
    let mut iters = 0;
    while iters < opts.max_iters {
        iters += 1;
        let mut cand = proj(&(&y + obj.ascent(&y) * step));
        let mut fc = obj.value(&cand);
        let mut restarted = false;
        if fc < fx {
            // Momentum overshot: restart from x with a plain gradient step.
            t = 1.0;
            cand = proj(&(&x + obj.ascent(&x) * step));
            fc = obj.value(&cand);
            restarted = true;
        }
        let mapping = (&cand - if restarted { &x } else { &y }).norm() * lip;
        if fc < fx {
            status = CqpStatus::Converged;
            break;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = Complex64::new((t - 1.0) / t_next, 0.0);
        y = &cand + (&cand - &x) * momentum;
        x = cand;
        fx = fc;
        t = t_next;
        if mapping <= tol {
            status = CqpStatus::Converged;
            break;
        }
    }
    let residual = set.residual(&x);
    if residual > opts.projection.feas_tol {
        status = CqpStatus::Infeasible;
    }
    Ok(CqpSolution { value: fx, x, iters, residual, status })
}
