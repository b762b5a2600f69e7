//! Cone fields around `F`, average domination along orbit segments, the
//! induced cone-width bounds and sampled robustness radii.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    oblique_decompose, orbit, restricted_mininorm, restricted_norm, splitting_along, CocycleLog, MapSystem, Point,
    Splitting, Subspace,
};
use crate::error::{Error, Result};
use crate::parallel::try_par_map;
use crate::qmc::{unit_cube_points, SamplingKind};
use crate::sum::CompensatedSum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeSpec {
    width: f64,
}

impl ConeSpec {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width < 1.0) {
            return Err(Error::invalid(format!("cone width must lie in (0, 1), got {width}")));
        }
        Ok(Self { width })
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

/// `‖v_E‖ / ‖v_F‖` for the splitting decomposition of `v` (infinite when
/// `v ∈ E`).
pub fn cone_ratio(v: &DVector<f64>, splitting: &Splitting) -> Result<f64> {
    let (v_e, v_f) = oblique_decompose(v, &splitting.e, &splitting.f)?;
    let nf = v_f.norm();
    let ne = v_e.norm();
    if nf == 0.0 {
        return Ok(if ne == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(ne / nf)
}

/// `v ∈ C_a^F`: `‖v_E‖ ≤ a·‖v_F‖`.
pub fn in_cone_split(v: &DVector<f64>, splitting: &Splitting, cone: &ConeSpec) -> Result<bool> {
    let (v_e, v_f) = oblique_decompose(v, &splitting.e, &splitting.f)?;
    Ok(v_e.norm() <= cone.width * v_f.norm())
}

/// `v ∈ C_a^F(x)` with the splitting of `sys` at `x`.
pub fn in_cone(sys: &dyn MapSystem, v: &DVector<f64>, x: &Point, cone: &ConeSpec) -> Result<bool> {
    in_cone_split(v, &sys.splitting(x)?, cone)
}

/// Cumulative domination products `Π_{j<i} ‖Df|E(f^j x)‖ / m(Df|F(f^j x))`
/// for `i = 1..length`, all at most `γⁱ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationCertificate {
    gamma: f64,
    length: usize,
    log_ratios: Vec<f64>,
}

impl DominationCertificate {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Logarithms of the cumulative products.
    pub fn log_ratios(&self) -> &[f64] {
        &self.log_ratios
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.log_ratios.iter().map(|l| l.exp()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Domination {
    Certified(DominationCertificate),
    /// First `i` at which the product exceeds `γⁱ`.
    FailsAt {
        index: usize,
    },
}

impl Domination {
    pub fn certificate(&self) -> Option<&DominationCertificate> {
        match self {
            Domination::Certified(c) => Some(c),
            Domination::FailsAt { .. } => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Domination::Certified(_))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// γ-average domination of the first `n` steps of `cocycle`.
pub fn check_avg_domination(cocycle: &CocycleLog, gamma: f64, n: usize) -> Result<Domination> {
    check_avg_domination_from(cocycle, 0, gamma, n)
}

/// γ-average domination of the segment starting at `f^start(x)`: products
/// `Π_{j=start}^{start+i-1}` for `i = 1..n`.
pub fn check_avg_domination_from(cocycle: &CocycleLog, start: usize, gamma: f64, n: usize) -> Result<Domination> {
    check_gamma(gamma)?;
    if start + n > cocycle.len() {
        return Err(Error::invalid(format!(
            "segment {start}..{} exceeds cocycle length {}",
            start + n,
            cocycle.len()
        )));
    }
    let log_gamma = gamma.ln();
    let mut acc = CompensatedSum::new();
    let mut log_ratios = Vec::with_capacity(n);
    let es = &cocycle.log_e()[start..start + n];
    let fs = &cocycle.log_f_inv()[start..start + n];
    for (i, (e, f)) in es.iter().zip(fs).enumerate() {
        acc.add(e + f);
        let v = acc.value();
        if v > (i + 1) as f64 * log_gamma {
            return Ok(Domination::FailsAt { index: i + 1 });
        }
        log_ratios.push(v);
    }
    Ok(Domination::Certified(DominationCertificate {
        gamma,
        length: n,
        log_ratios,
    }))
}

/// Guaranteed width `γⁱ·a` of `Df^i(x)·C_a^F(x)` along a γ-average
/// dominated segment.
pub fn cone_width_bound(a: f64, gamma: f64, i: usize) -> f64 {
    a * gamma.powi(i as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeContractionReport {
    /// Entry `i − 1`: max measured width at step `i` over `γⁱ·a`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub violated: bool,
}

pub const CONE_VIOLATION_TOL: f64 = 1e-8;

fn random_unit_in(s: &Subspace, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let c = DVector::from_fn(s.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let n = c.norm();
        if n > 1e-3 && n <= 1.0 {
            return s.frame() * (c / n);
        }
    }
}

/// Keeps the `keep_e` component of `v` in the splitting `(e, f)`.
fn component(v: &DVector<f64>, e: &Subspace, f: &Subspace, keep_e: bool) -> Result<DVector<f64>> {
    let (v_e, v_f) = oblique_decompose(v, e, f)?;
    Ok(if keep_e { v_e } else { v_f })
}

/// Pushes `samples` random boundary vectors of `C_a^F(x)` through `Df^i`
/// and compares their width with `γⁱ·a` for `i = 1..n`.
///
/// The `E` and `F` parts are pushed separately and re-projected onto the
/// splitting at each step, so roundoff that leaks into `F` cannot mask the
/// contraction of the `E` part.
pub fn verify_cone_contraction(
    sys: &dyn MapSystem,
    x: &Point,
    a: f64,
    gamma: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<ConeContractionReport> {
    ConeSpec::new(a)?;
    check_gamma(gamma)?;
    if n == 0 {
        return Ok(ConeContractionReport {
            ratios: Vec::new(),
            max_ratio: 0.0,
            violated: false,
        });
    }
    let pts = orbit(sys, x, n)?;
    let tangents: Vec<_> = pts[..n].iter().map(|p| sys.tangent(p)).collect();
    let (es, fs) = splitting_along(sys, &pts, &tangents)?;
    let mut acc = CompensatedSum::new();
    for t in 0..n {
        acc.add(restricted_norm(&tangents[t], &es[t])?.ln() - restricted_mininorm(&tangents[t], &fs[t])?.ln());
        if acc.value() > (t + 1) as f64 * gamma.ln() {
            return Err(Error::hypothesis(format!(
                "segment is not {gamma}-average dominated at step {}",
                t + 1
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = vec![0.0_f64; n];
    for _ in 0..samples.max(1) {
        let mut v_f = random_unit_in(&fs[0], &mut rng);
        let mut v_e = random_unit_in(&es[0], &mut rng) * a;
        for t in 0..n {
            v_e = component(&tangents[t].apply(&v_e), &es[t + 1], &fs[t + 1], true)?;
            v_f = component(&tangents[t].apply(&v_f), &es[t + 1], &fs[t + 1], false)?;
            let scale = v_f.norm();
            v_e /= scale;
            v_f /= scale;
            let width = v_e.norm();
            let r = width / cone_width_bound(a, gamma, t + 1);
            ratios[t] = ratios[t].max(r);
        }
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ConeContractionReport {
        ratios,
        max_ratio,
        violated: max_ratio > 1.0 + CONE_VIOLATION_TOL,
    })
}

/// Sampling plan for [`domination_robustness_radius`]: `base_points`
/// quasi-uniform points, each compared with `directions` neighbors at every
/// scale `diam·2^{-k}`, `k < levels`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusGrid {
    pub base_points: usize,
    pub levels: usize,
    pub directions: usize,
    pub sampling: SamplingKind,
    pub seed: u64,
}

impl Default for RadiusGrid {
    fn default() -> Self {
        Self {
            base_points: 256,
            levels: 24,
            directions: 4,
            sampling: SamplingKind::Kronecker,
            seed: 0,
        }
    }
}

pub const RADIUS_SAFETY: f64 = 2.0;

fn log_rates(sys: &dyn MapSystem, x: &Point) -> Result<(f64, f64)> {
    let df = sys.tangent(x);
    let s = sys.splitting(x)?;
    Ok((restricted_norm(&df, &s.e)?.ln(), restricted_mininorm(&df, &s.f)?.ln()))
}

/// Largest sampled scale `r` at which `log ‖Df|E‖` and `log m(Df|F)` vary
/// by at most `½·log(γ2/γ1)` (with safety factor 2) between points at
/// distance `≤ r`: the ratios then stay in `[√(γ1/γ2), √(γ2/γ1)]`.
pub fn domination_robustness_radius(sys: &dyn MapSystem, gamma1: f64, gamma2: f64, grid: &RadiusGrid) -> Result<f64> {
    if !(gamma1 > 0.0 && gamma1 < gamma2 && gamma2 < 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < gamma1 < gamma2 < 1, got gamma1={gamma1}, gamma2={gamma2}"
        )));
    }
    if grid.levels == 0 || grid.base_points == 0 || grid.directions == 0 {
        return Err(Error::invalid("radius grid must have points, levels and directions"));
    }
    let chart = sys.chart();
    let dim = sys.dim();
    let diam = chart.diameter();
    let bases: Vec<(usize, Point)> = unit_cube_points(grid.sampling, grid.base_points, dim, grid.seed)
        .iter()
        .map(|u| chart.from_unit_cube(u))
        .enumerate()
        .filter(|(_, p)| sys.contains(p))
        .collect();
    let per_base = try_par_map(&bases, |(idx, x)| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(grid.seed ^ (*idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (le, lf) = log_rates(sys, x)?;
        let ambient = Subspace::from_orthonormal(DMatrix::identity(dim, dim))?;
        let mut osc = vec![0.0_f64; grid.levels];
        for (k, slot) in osc.iter_mut().enumerate() {
            let h = diam * 0.5f64.powi(k as i32);
            for _ in 0..grid.directions {
                let u = random_unit_in(&ambient, &mut rng);
                let y = chart.translate(x, &(u * h));
                if !sys.contains(&y) {
                    continue;
                }
                let (ye, yf) = log_rates(sys, &y)?;
                *slot = slot.max((ye - le).abs()).max((yf - lf).abs());
            }
        }
        Ok(osc)
    })?;
    let mut osc = vec![0.0_f64; grid.levels];
    for row in &per_base {
        for (o, v) in osc.iter_mut().zip(row) {
            *o = o.max(*v);
        }
    }
    // modulus of continuity at h_k: worst oscillation over all scales ≤ h_k
    let mut envelope = osc.clone();
    for k in (0..grid.levels.saturating_sub(1)).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    let threshold = 0.5 * (gamma2 / gamma1).ln();
    envelope
        .iter()
        .position(|&w| RADIUS_SAFETY * w <= threshold)
        .map(|k| diam * 0.5f64.powi(k as i32))
        .ok_or(Error::EmptyRadius)
}
