//! Carving the hyperbolic pre-disk `D′ ⊆ D` whose first `n` iterates stay
//! within intrinsic radius `r` of the center orbit.

use nalgebra::DVector;

use super::{center_orbit, DiskGenerator, Domain, EmbeddedDisk};
use crate::dynamics::{MapSystem, Point};
use crate::error::{Error, Result};
use crate::parallel::try_par_map;

/// Points per ray in the trapezoid integration of radial speeds.
pub const CARVE_RAY_SAMPLES: usize = 65;
/// Rays used for two-dimensional disks.
const STAR_RAYS: usize = 32;
const BISECTION_STEPS: usize = 64;

/// `‖Df^{m+k}·∂_t‖` at the generator parameter `p` along the unit
/// parameter direction `u`, for `k = 0..=n`.
fn ray_speeds(
    sys: &dyn MapSystem,
    generator: &DiskGenerator,
    centers: &[Point],
    m: usize,
    p: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<Vec<f64>> {
    let chart = sys.chart();
    let mut offset = &generator.frame * p * generator.radius;
    let mut v = &generator.frame * u * generator.radius;
    let mut speeds = Vec::with_capacity(centers.len() - m);
    for (step, c) in centers.iter().enumerate() {
        if step >= m {
            speeds.push(v.norm());
        }
        if step + 1 == centers.len() {
            break;
        }
        let y = chart.translate(c, &offset);
        if !sys.contains(&y) {
            return Err(Error::OrbitEscaped { step });
        }
        v = sys.tangent(&y).apply(&v);
        offset = sys.forward_offset(c, &offset);
    }
    Ok(speeds)
}

/// `max_k L_k(t)`, the largest intrinsic radial distance reached by the
/// iterates `m..=m+n` of the ray segment `[0, t]·u`.
fn radial_reach(
    sys: &dyn MapSystem,
    generator: &DiskGenerator,
    centers: &[Point],
    m: usize,
    u: &DVector<f64>,
    t: f64,
) -> Result<f64> {
    let ts: Vec<f64> = (0..CARVE_RAY_SAMPLES)
        .map(|i| t * i as f64 / (CARVE_RAY_SAMPLES - 1) as f64)
        .collect();
    let speeds = try_par_map(&ts, |&s| ray_speeds(sys, generator, centers, m, &(u * s), u))?;
    let h = t / (CARVE_RAY_SAMPLES - 1) as f64;
    let levels = speeds[0].len();
    let mut best = 0.0_f64;
    for k in 0..levels {
        let mut acc = 0.0;
        for i in 1..speeds.len() {
            acc += 0.5 * (speeds[i - 1][k] + speeds[i][k]) * h;
        }
        best = best.max(acc);
    }
    Ok(best)
}

/// Largest `t ≤ extent` with `max_k L_k(t) ≤ r` on one ray.
#[allow(clippy::too_many_arguments)]
fn carve_ray(
    sys: &dyn MapSystem,
    generator: &DiskGenerator,
    centers: &[Point],
    m: usize,
    n: usize,
    u: &DVector<f64>,
    extent: f64,
    r: f64,
) -> Result<f64> {
    let reach = |t: f64| radial_reach(sys, generator, centers, m, u, t);
    let top = reach(extent)?;
    if top <= r {
        if n == 0 {
            return Ok(extent);
        }
        return Err(Error::CarvingFailed(format!(
            "iterates reach only {top:e} < r = {r:e} inside the disk along direction {:?}",
            u.as_slice()
        )));
    }
    let speed0 = ray_speeds(sys, generator, centers, m, &(u * 0.0), u)?
        .into_iter()
        .fold(0.0, f64::max);
    if !(speed0 > 0.0) {
        return Err(Error::CarvingFailed("zero radial speed at the center".into()));
    }
    let guess = (r / speed0).min(extent);
    let (mut lo, mut hi) = (guess, guess);
    while reach(lo)? > r {
        lo *= 0.25;
        if lo * generator.radius < 1e-280 {
            return Err(Error::CarvingFailed(format!(
                "component collapses below {:e} along direction {:?}",
                lo * generator.radius,
                u.as_slice()
            )));
        }
    }
    while hi < extent && reach(hi)? <= r {
        hi = (hi * 4.0).min(extent);
    }
    if lo == hi {
        hi = extent;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reach(mid)? <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// The component `D′ ∋ x` of `{y ∈ D : d_{f^k D}(f^k x, f^k y) ≤ r, 0 ≤ k ≤ n}`,
/// resampled at the resolution of `d` with its center at the same point.
/// For `n = 0` this is `ball(x, r) ∩ D`.
pub fn hyperbolic_component(sys: &dyn MapSystem, d: &EmbeddedDisk, n: usize, r: f64) -> Result<EmbeddedDisk> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("carving radius must be positive, got {r}")));
    }
    let generator = d
        .generator()
        .ok_or_else(|| Error::CarvingFailed("disk has no generator to re-evaluate".into()))?
        .clone();
    let m = d.iterates();
    let centers = center_orbit(sys, &generator.origin, m + n)?;
    let domain = if d.dim() == 1 {
        let mut ext = [0.0; 2];
        for (slot, sign) in ext.iter_mut().zip([1.0, -1.0]) {
            let u = DVector::from_vec(vec![sign]);
            *slot = carve_ray(sys, &generator, &centers, m, n, &u, d.domain().extent(&u), r)?;
        }
        Domain::Interval {
            plus: ext[0],
            minus: ext[1],
        }
    } else {
        let rho = (0..STAR_RAYS)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / STAR_RAYS as f64;
                let u = DVector::from_vec(vec![a.cos(), a.sin()]);
                carve_ray(sys, &generator, &centers, m, n, &u, d.domain().extent(&u), r)
            })
            .collect::<Result<Vec<_>>>()?;
        Domain::Star { rho }
    };
    EmbeddedDisk::from_generator(sys, generator, domain, d.dim(), d.resolution(), m, *d.limits())
}

/// `max_{y, 1 ≤ k ≤ n} d_{f^{n−k}D}(f^{n−k}x, f^{n−k}y) / (σ^{k/2}·d_{f^n D}(f^n x, f^n y))`
/// over the samples of a carved disk. Returns `0` for `n = 0`.
pub fn backward_contraction_check(sys: &dyn MapSystem, d: &EmbeddedDisk, n: usize, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut dists = Vec::with_capacity(n + 1);
    let mut cur = d.clone();
    dists.push(cur.distances_from(cur.center_index()));
    for _ in 0..n {
        cur = super::iterate_disk(sys, &cur, 1)?;
        dists.push(cur.distances_from(cur.center_index()));
    }
    let last = &dists[n];
    let mut worst = 0.0_f64;
    for y in 0..d.len() {
        if y == d.center_index() || last[y] == 0.0 {
            continue;
        }
        for k in 1..=n {
            let ratio = dists[n - k][y] / (sigma.powf(0.5 * k as f64) * last[y]);
            worst = worst.max(ratio);
        }
    }
    Ok(worst)
}
