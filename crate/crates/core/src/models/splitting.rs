//! Numerical convergence of the invariant splitting by power iteration of
//! the tangent cocycle.

use crate::dynamics::{restricted_mininorm, subspace_distance, MapSystem, Point, Splitting, Subspace, SystemConstants};
use crate::error::{Error, Result};
use crate::qmc::{unit_cube_points, SamplingKind};

/// Residual below which a non-decreasing residual is treated as noise.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// `x_{-k}` for `k = 0..=depth` (no region check: backward orbits of points
/// off the attractor may leave the trapping region).
fn backward_orbit(sys: &dyn MapSystem, x: &Point, depth: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(depth + 1);
    out.push(x.clone());
    for k in 0..depth {
        let prev = sys.inverse(&out[k]);
        out.push(prev);
    }
    out
}

fn forward_orbit(sys: &dyn MapSystem, x: &Point, depth: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(depth + 1);
    out.push(x.clone());
    for k in 0..depth {
        let next = sys.forward(&out[k]);
        out.push(next);
    }
    out
}

/// Pushes the guessed `F` at `back[from]` forward to `back[0]`.
fn push_f(sys: &dyn MapSystem, back: &[Point], from: usize) -> Result<Subspace> {
    let mut f = sys.splitting_guess(&back[from])?.f;
    for k in (1..=from).rev() {
        f = f.image(&sys.tangent(&back[k]))?;
    }
    Ok(f)
}

/// Pulls the guessed `E` at `fwd[from]` back to `fwd[0]`.
fn pull_e(sys: &dyn MapSystem, fwd: &[Point], from: usize) -> Result<Subspace> {
    let mut e = sys.splitting_guess(&fwd[from])?.e;
    for k in (0..from).rev() {
        e = e.preimage(&sys.tangent(&fwd[k]))?;
    }
    Ok(e)
}

/// Depth-`depth` approximations of `E(x)` and `F(x)` without a residual.
pub fn converge_frames(sys: &dyn MapSystem, x: &Point, depth: usize) -> Result<Splitting> {
    let back = backward_orbit(sys, x, depth);
    let fwd = forward_orbit(sys, x, depth);
    Splitting::new(pull_e(sys, &fwd, depth)?, push_f(sys, &back, depth)?)
}

/// Invariance residual of the depth-`depth` splitting at `x`:
/// `max(dist(Df·F_d(x), F_d(fx)), dist(Df⁻¹·E_d(fx), E_d(x)))`.
fn residual_at_depth(sys: &dyn MapSystem, x: &Point, depth: usize) -> Result<(Splitting, f64)> {
    let fx = sys.forward(x);
    // fx, x, x_{-1}, ..., x_{-depth}
    let back = backward_orbit(sys, &fx, depth + 1);
    // x, fx, ..., f^{depth+1} x
    let fwd = forward_orbit(sys, x, depth + 1);
    let df = sys.tangent(x);
    let f_here = push_f(sys, &back[1..], depth)?;
    let f_there = push_f(sys, &back, depth)?;
    let e_here = pull_e(sys, &fwd, depth)?;
    let e_there = pull_e(sys, &fwd[1..], depth)?;
    let rf = subspace_distance(&f_here.image(&df)?, &f_there)?;
    let re = subspace_distance(&e_there.preimage(&df)?, &e_here)?;
    Ok((Splitting::new(e_here, f_here)?, rf.max(re)))
}

/// Converged `(E, F)` at `x` with its invariance residual. Fails with
/// `NoConvergence` when the residual at `depth` exceeds the residual at
/// `depth / 2` (and is above the roundoff floor).
pub fn converge_splitting(sys: &dyn MapSystem, x: &Point, depth: usize) -> Result<(Subspace, Subspace, f64)> {
    if depth == 0 {
        return Err(Error::invalid("convergence depth must be at least 1"));
    }
    let (split, residual) = residual_at_depth(sys, x, depth)?;
    if depth >= 2 {
        let half = depth / 2;
        let (_, previous) = residual_at_depth(sys, x, half)?;
        if residual > previous && residual > RESIDUAL_FLOOR {
            return Err(Error::NoConvergence {
                depth,
                residual,
                half,
                previous,
            });
        }
    }
    Ok((split.e, split.f, residual))
}

/// `b = inf m(Df|F)` and `C0 = sup |log m(Df|F)|` over a quasi-random sample of
/// the region (`‖Df⁻¹|F‖ = 1 / m(Df|F)`).
pub fn scan_system_constants(sys: &dyn MapSystem, points: usize, beta: f64, xi: f64) -> Result<SystemConstants> {
    let mut b = f64::INFINITY;
    let mut c0 = 0.0_f64;
    for u in unit_cube_points(SamplingKind::Kronecker, points, sys.dim(), 0) {
        let x = sys.chart().from_unit_cube(&u);
        if !sys.contains(&x) {
            continue;
        }
        let m = restricted_mininorm(&sys.tangent(&x), &sys.splitting(&x)?.f)?;
        b = b.min(m);
        c0 = c0.max(m.ln().abs());
    }
    if !b.is_finite() {
        return Err(Error::ConstructionFailed("no sample point inside the region".into()));
    }
    Ok(SystemConstants { b, c0, beta, xi })
}
