//! Bounded volume distortion of iterated hyperbolic pre-disks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{iterate_disk, EmbeddedDisk};
use crate::dynamics::{restricted_det, subspace_distance, MapSystem, Point, Subspace};
use crate::error::{Error, Result};
use crate::parallel::try_par_map;
use crate::qmc::{unit_cube_points, SamplingKind};

/// Safety factor applied to grid-scanned Lipschitz and Hölder constants.
pub const SCAN_SAFETY: f64 = 1.5;

/// Sampling plan for grid-scanned regularity constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanGrid {
    pub points: usize,
    /// Random directions (or tilts) per point.
    pub directions: usize,
    /// Largest displacement; halved `levels − 1` times.
    pub scale: f64,
    pub levels: usize,
    /// Burn-in iterates before sampling.
    pub burn_in: usize,
    pub sampling: SamplingKind,
    pub seed: u64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            points: 128,
            directions: 4,
            scale: 0.02,
            levels: 4,
            burn_in: 20,
            sampling: SamplingKind::Kronecker,
            seed: 0,
        }
    }
}

impl ScanGrid {
    pub(crate) fn base_points(&self, sys: &dyn MapSystem) -> Result<Vec<Point>> {
        let chart = sys.chart();
        let starts: Vec<Point> = unit_cube_points(self.sampling, self.points, sys.dim(), self.seed)
            .iter()
            .map(|u| chart.from_unit_cube(u))
            .collect();
        try_par_map(&starts, |x| crate::dynamics::iterate(sys, x, self.burn_in))
    }

    pub(crate) fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

pub(crate) fn random_unit(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    let norm = m.norm();
    if norm == 0.0 {
        DMatrix::from_element(rows, cols, 1.0) / ((rows * cols) as f64).sqrt()
    } else {
        m / norm
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionConstants {
    /// Cone width `a` of the tangent planes.
    pub a: f64,
    pub lambda2: f64,
    pub beta: f64,
    /// Lipschitz constant of `T ↦ log|det Df(y)|_T|` over the cone.
    pub r1: f64,
    /// `β`-Hölder constant of `y ↦ log|det Df|F(y)|`.
    pub r2: f64,
    /// Carving radius.
    pub r: f64,
}

impl DistortionConstants {
    /// Scans `R1` and `R2` on `grid` (with [`SCAN_SAFETY`]).
    pub fn measure(sys: &dyn MapSystem, a: f64, lambda2: f64, r: f64, grid: &ScanGrid) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) || !(lambda2 > 0.0 && lambda2 < 1.0) || !(r > 0.0) {
            return Err(Error::invalid(format!(
                "need a, lambda2 in (0, 1) and r > 0, got a = {a}, lambda2 = {lambda2}, r = {r}"
            )));
        }
        let beta = sys.constants().beta;
        let points = grid.base_points(sys)?;
        let chart = sys.chart();
        let idx: Vec<usize> = (0..points.len()).collect();
        let rows = try_par_map(&idx, |&i| -> Result<(f64, f64)> {
            let y = &points[i];
            let mut rng = grid.rng(i as u64);
            let s = sys.splitting(y)?;
            let df = sys.tangent(y);
            let base = restricted_det(&df, &s.f)?.ln();
            let (k, m) = (s.f.dim(), s.e.dim());
            let tilt = |l: &DMatrix<f64>| Subspace::from_spanning(s.f.frame() + s.e.frame() * l);
            let mut r1 = 0.0_f64;
            for _ in 0..grid.directions {
                let dir = random_unit(&mut rng, m, k);
                for lvl in 0..grid.levels {
                    let t = tilt(&(&dir * (a * 0.5f64.powi(lvl as i32))))?;
                    let dist = subspace_distance(&t, &s.f)?;
                    if dist > 0.0 {
                        r1 = r1.max((restricted_det(&df, &t)?.ln() - base).abs() / dist);
                    }
                }
            }
            let mut r2 = 0.0_f64;
            for _ in 0..grid.directions {
                let v = random_unit(&mut rng, sys.dim(), 1).column(0).into_owned();
                for lvl in 0..grid.levels {
                    let h = grid.scale * 0.5f64.powi(lvl as i32);
                    let z = chart.translate(y, &(&v * h));
                    if !sys.contains(&z) {
                        continue;
                    }
                    let sz = sys.splitting(&z)?;
                    let g = restricted_det(&sys.tangent(&z), &sz.f)?.ln();
                    r2 = r2.max((g - base).abs() / h.powf(beta));
                }
            }
            Ok((r1, r2))
        })?;
        Ok(Self {
            a,
            lambda2,
            beta,
            r1: SCAN_SAFETY * rows.iter().map(|r| r.0).fold(0.0, f64::max),
            r2: SCAN_SAFETY * rows.iter().map(|r| r.1).fold(0.0, f64::max),
            r,
        })
    }

    /// `𝒦 = exp(2·R1·a/(1−λ2) + R2·λ2^{β/2}/(1−λ2^{β/2}))`.
    pub fn bound(&self) -> f64 {
        let q = self.lambda2.powf(0.5 * self.beta);
        (2.0 * self.r1 * self.a / (1.0 - self.lambda2) + self.r2 * q / (1.0 - q)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub sample: usize,
    pub n: usize,
    /// `|det Df^n|T_y D| / |det Df^n|T_x D|`.
    pub ratio: f64,
    pub bound: f64,
    /// `d_{f^n D}(f^n x, f^n y)`.
    pub distance: f64,
}

/// Distortion ratios of every sample of `d` against its center after `n`
/// iterates. Fails with `HypothesisViolated` when `f^n(d)` reaches beyond
/// the carving radius by more than one grid step.
pub fn distortion_profile(
    sys: &dyn MapSystem,
    d: &EmbeddedDisk,
    n: usize,
    consts: &DistortionConstants,
) -> Result<Vec<DistortionReport>> {
    let mut logs = vec![0.0; d.len()];
    let mut cur = d.clone();
    for _ in 0..n {
        let idx: Vec<usize> = (0..cur.len()).collect();
        let step = try_par_map(&idx, |&i| {
            Ok::<f64, Error>(restricted_det(&sys.tangent(&cur.point(i)), &cur.tangents()[i])?.ln())
        })?;
        for (acc, s) in logs.iter_mut().zip(step) {
            *acc += s;
        }
        cur = iterate_disk(sys, &cur, 1)?;
    }
    let dist = cur.distances_from(cur.center_index());
    let reach = dist.iter().copied().fold(0.0, f64::max);
    if reach > consts.r * (1.0 + d.grid_step()) {
        return Err(Error::hypothesis(format!(
            "f^{n}(D) reaches {reach:e} from the center, beyond r = {:e}",
            consts.r
        )));
    }
    let center = logs[d.center_index()];
    let bound = consts.bound();
    Ok((0..d.len())
        .map(|i| DistortionReport {
            sample: i,
            n,
            ratio: (logs[i] - center).exp(),
            bound,
            distance: dist[i],
        })
        .collect())
}

/// Distortion ratio of one sample.
pub fn distortion(
    sys: &dyn MapSystem,
    d: &EmbeddedDisk,
    y_index: usize,
    n: usize,
    consts: &DistortionConstants,
) -> Result<DistortionReport> {
    if y_index >= d.len() {
        return Err(Error::invalid(format!("sample {y_index} out of {} samples", d.len())));
    }
    Ok(distortion_profile(sys, d, n, consts)?[y_index])
}
