//! Hölder curvature of disks and its recursion under iteration.

use nalgebra::DMatrix;
use serde::Serialize;

use super::distortion::{random_unit, ScanGrid, SCAN_SAFETY};
use super::{iterate_disk, EmbeddedDisk};
use crate::dynamics::{restricted_mininorm, restricted_norm, MapSystem, Point, Subspace};
use crate::error::{Error, Result};
use crate::models::ConstantsH;
use crate::parallel::try_par_map;

/// Fraction of the chart diameter used as the default pair radius `δ0`.
pub const PAIR_RADIUS_FRACTION: f64 = 0.1;
/// Largest number of base samples examined on a two-dimensional disk.
const MAX_SURFACE_BASES: usize = 1500;
/// Graph norms below this are roundoff between equal planes and count as 0.
pub const TANGENT_ROUNDOFF: f64 = 64.0 * f64::EPSILON;

/// Complement the tangent graphs are written into.
#[derive(Clone, Copy)]
pub enum Complement<'a> {
    /// `T_x D^⊥`.
    Orthogonal,
    /// `E(x)` of the given system.
    Stable(&'a dyn MapSystem),
}

impl Complement<'_> {
    fn at(&self, d: &EmbeddedDisk, i: usize) -> Result<Subspace> {
        match self {
            Complement::Orthogonal => d.tangents()[i].orthogonal_complement(),
            Complement::Stable(sys) => Ok(sys.splitting(&d.point(i))?.e),
        }
    }
}

/// `max ‖L_x(y)‖ / d_D(x, y)^ξ` over sample pairs with `d_D(x, y) ≤ 0.1·diam`,
/// where `T_y D = graph(L_x(y))` over `T_x D` into the complement. Graph
/// norms up to [`TANGENT_ROUNDOFF`] are ignored, so flat disks measure 0.
pub fn holder_curvature(d: &EmbeddedDisk, xi: f64, complement: Complement<'_>) -> Result<f64> {
    holder_curvature_within(d, xi, complement, PAIR_RADIUS_FRACTION * d.chart().diameter())
}

/// [`holder_curvature`] with an explicit pair radius `delta0`. Distances are
/// arclengths on curves and chords (a lower bound, so the estimate is
/// conservative) on surfaces.
pub fn holder_curvature_within(d: &EmbeddedDisk, xi: f64, complement: Complement<'_>, delta0: f64) -> Result<f64> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::invalid(format!("xi must lie in (0, 1], got {xi}")));
    }
    let stride = if d.dim() == 1 {
        1
    } else {
        ((d.len() as f64 / MAX_SURFACE_BASES as f64).sqrt().ceil() as usize).max(1)
    };
    let picked: Vec<usize> = if stride == 1 {
        (0..d.len()).collect()
    } else {
        let res = d.resolution();
        (0..d.len())
            .filter(|&i| {
                let q = &d.grid()[i];
                let gi = ((q[0] + 1.0) / d.grid_step()).round() as usize;
                let gj = ((q[1] + 1.0) / d.grid_step()).round() as usize;
                gi % stride == (res / 2) % stride && gj % stride == (res / 2) % stride
            })
            .collect()
    };
    let arclength: Vec<f64> = if d.dim() == 1 { d.distances_from(0) } else { Vec::new() };
    let dist = |i: usize, j: usize| {
        if d.dim() == 1 {
            (arclength[i] - arclength[j]).abs()
        } else {
            (&d.offsets()[i] - &d.offsets()[j]).norm()
        }
    };
    let k = d.dim();
    let rows = try_par_map(&picked, |&i| -> Result<f64> {
        let c = complement.at(d, i)?;
        let joint = DMatrix::from_columns(
            &d.tangents()[i]
                .frame()
                .column_iter()
                .chain(c.frame().column_iter())
                .map(|col| col.into_owned())
                .collect::<Vec<_>>(),
        );
        let lu = joint.lu();
        let mut worst = 0.0_f64;
        for &j in &picked {
            let dij = dist(i, j);
            if j == i || dij > delta0 || dij == 0.0 {
                continue;
            }
            let coeffs = lu
                .solve(d.tangents()[j].frame())
                .ok_or(Error::DegenerateTangent { base: i, sample: j })?;
            let alpha = coeffs.rows(0, k).into_owned();
            let beta = coeffs.rows(k, coeffs.nrows() - k).into_owned();
            let inv = alpha
                .try_inverse()
                .ok_or(Error::DegenerateTangent { base: i, sample: j })?;
            let l = c.frame() * beta * inv;
            let norm = l.singular_values().iter().copied().fold(0.0, f64::max);
            if !(norm <= 1.0) {
                return Err(Error::DegenerateTangent { base: i, sample: j });
            }
            if norm > TANGENT_ROUNDOFF {
                worst = worst.max(norm / dij.powf(xi));
            }
        }
        Ok(worst)
    })?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureConstants {
    pub xi: f64,
    pub alpha: f64,
    pub b: f64,
    pub lambda4: f64,
    /// `(L1, ξ)`-Hölder constant of `Df`.
    pub l1: f64,
    /// `𝓛 = 2^{1+ξ}·L1 / b^{1+ξ}`.
    pub script_l: f64,
}

impl CurvatureConstants {
    pub fn new(h: &ConstantsH, l1: f64) -> Self {
        let e = 1.0 + h.xi;
        Self {
            xi: h.xi,
            alpha: h.alpha,
            b: h.b,
            lambda4: h.lambda4,
            l1,
            script_l: 2f64.powf(e) * l1 / h.b.powf(e),
        }
    }

    /// Scans `L1 = sup ‖Df(y) − Df(z)‖ / d(y, z)^ξ` on `grid` (with the scan
    /// safety factor).
    pub fn measure(sys: &dyn MapSystem, h: &ConstantsH, grid: &ScanGrid) -> Result<Self> {
        let points = grid.base_points(sys)?;
        let chart = sys.chart();
        let idx: Vec<usize> = (0..points.len()).collect();
        let rows = try_par_map(&idx, |&i| -> Result<f64> {
            let y = &points[i];
            let mut rng = grid.rng(0x5eed ^ i as u64);
            let dfy = sys.tangent(y);
            let mut worst = 0.0_f64;
            for _ in 0..grid.directions {
                let v = random_unit(&mut rng, sys.dim(), 1).column(0).into_owned();
                for lvl in 0..grid.levels {
                    let step = grid.scale * 0.5f64.powi(lvl as i32);
                    let z = chart.translate(y, &(&v * step));
                    if !sys.contains(&z) {
                        continue;
                    }
                    let diff = sys.tangent(&z).matrix() - dfy.matrix();
                    let norm = diff.singular_values().iter().copied().fold(0.0, f64::max);
                    worst = worst.max(norm / step.powf(h.xi));
                }
            }
            Ok(worst)
        })?;
        Ok(Self::new(h, SCAN_SAFETY * rows.into_iter().fold(0.0, f64::max)))
    }

    /// `c(y) = (‖Df|E(y)‖ + 2α) / (m(Df|F(y)) − 2α)^{1+ξ}`.
    pub fn factor_at(&self, sys: &dyn MapSystem, y: &Point) -> Result<f64> {
        let s = sys.splitting(y)?;
        let df = sys.tangent(y);
        let num = restricted_norm(&df, &s.e)? + 2.0 * self.alpha;
        let den = restricted_mininorm(&df, &s.f)? - 2.0 * self.alpha;
        if !(den > 0.0) {
            return Err(Error::ConstantsInvalid(format!(
                "m(Df|F) − 2α = {den:e} is not positive at {:?}",
                y.as_slice()
            )));
        }
        Ok(num / den.powf(1.0 + self.xi))
    }
}

/// `c_j` along `x, f(x), …, f^{n−1}(x)`.
pub fn step_factors(sys: &dyn MapSystem, x: &Point, n: usize, consts: &CurvatureConstants) -> Result<Vec<f64>> {
    let orbit = crate::dynamics::orbit(sys, x, n)?;
    orbit[..n].iter().map(|y| consts.factor_at(sys, y)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub n: usize,
    /// `𝓗(D)`.
    pub initial: f64,
    /// `𝓗(f^n D)`.
    pub measured: f64,
    /// `c_0⋯c_{n−1}·𝓗(D) + 𝓛·(1 + c_{n−1} + … + c_{n−1}⋯c_1)`.
    pub inductive_bound: f64,
    /// `λ4^n·𝓗(D) + 𝓛/(1 − λ4)`.
    pub closed_bound: f64,
    pub factors: Vec<f64>,
}

impl CurvatureReport {
    /// Whether the measured curvature respects both bounds up to `tol`
    /// (relative).
    pub fn holds(&self, tol: f64) -> bool {
        self.measured <= self.inductive_bound * (1.0 + tol) && self.measured <= self.closed_bound * (1.0 + tol)
    }
}

/// Curvature of `f^n(d)` against the inductive and closed-form bounds. The
/// factors must satisfy `c_{n−k}⋯c_{n−1} ≤ λ4^k` for every `k`.
pub fn curvature_recursion(
    sys: &dyn MapSystem,
    d: &EmbeddedDisk,
    n: usize,
    consts: &CurvatureConstants,
) -> Result<CurvatureReport> {
    let factors = step_factors(sys, d.center(), n, consts)?;
    let mut tail = 1.0;
    for k in 1..=n {
        tail *= factors[n - k];
        if tail > consts.lambda4.powi(k as i32) * (1.0 + 1e-12) {
            return Err(Error::ConstantsInvalid(format!(
                "c_{}⋯c_{} = {tail:e} exceeds lambda4^{k} = {:e}",
                n - k,
                n - 1,
                consts.lambda4.powi(k as i32)
            )));
        }
    }
    let initial = holder_curvature(d, consts.xi, Complement::Stable(sys))?;
    let img = iterate_disk(sys, d, n)?;
    let measured = holder_curvature(&img, consts.xi, Complement::Stable(sys))?;
    let mut inductive = initial;
    for c in &factors {
        inductive = c * inductive + consts.script_l;
    }
    let closed = consts.lambda4.powi(n as i32) * initial + consts.script_l / (1.0 - consts.lambda4);
    Ok(CurvatureReport {
        n,
        initial,
        measured,
        inductive_bound: inductive,
        closed_bound: closed,
        factors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingleStepReport {
    pub before: f64,
    pub after: f64,
    /// `max c(y)·𝓗(D) + L1 / (min m(Df|F(y)) − 2α)^{1+ξ}` over the samples.
    pub bound: f64,
}

/// One step of the curvature recursion on `d`.
pub fn single_step_curvature(
    sys: &dyn MapSystem,
    d: &EmbeddedDisk,
    consts: &CurvatureConstants,
) -> Result<SingleStepReport> {
    let idx: Vec<usize> = (0..d.len()).collect();
    let rows = try_par_map(&idx, |&i| -> Result<(f64, f64)> {
        let y = d.point(i);
        let s = sys.splitting(&y)?;
        Ok((consts.factor_at(sys, &y)?, restricted_mininorm(&sys.tangent(&y), &s.f)?))
    })?;
    let c = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let m = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let before = holder_curvature(d, consts.xi, Complement::Stable(sys))?;
    let after = holder_curvature(&iterate_disk(sys, d, 1)?, consts.xi, Complement::Stable(sys))?;
    Ok(SingleStepReport {
        before,
        after,
        bound: c * before + consts.l1 / (m - 2.0 * consts.alpha).powf(1.0 + consts.xi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disks::{hyperbolic_component, make_disk, DiskLimits};
    use crate::dynamics::Chart;
    use crate::models::{measure_constants_h, Cat, ConstantsGrid, PerturbedCat};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn arc(resolution: usize, half_angle: f64) -> EmbeddedDisk {
        let chart = Chart::Box {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
        };
        let mut params = Vec::new();
        let mut offsets = Vec::new();
        let mut jacs = Vec::new();
        for i in 0..resolution {
            let p = -1.0 + 2.0 * i as f64 / (resolution - 1) as f64;
            let th = half_angle * p;
            params.push(DVector::from_vec(vec![p]));
            offsets.push(DVector::from_vec(vec![th.cos() - 1.0, th.sin()]));
            jacs.push(DMatrix::from_column_slice(
                2,
                1,
                &[-th.sin() * half_angle, th.cos() * half_angle],
            ));
        }
        EmbeddedDisk::from_samples(
            chart,
            Point::new(vec![1.0, 0.0]),
            resolution,
            1,
            params,
            offsets,
            jacs,
            DiskLimits::default(),
        )
        .unwrap()
    }

    #[test]
    fn unit_circle_has_unit_curvature() {
        let d = arc(401, 0.3);
        let h = holder_curvature_within(&d, 1.0, Complement::Orthogonal, 0.05).unwrap();
        assert_relative_eq!(h, 1.0, epsilon = 2e-3);
        let coarse = holder_curvature_within(&arc(201, 0.3), 1.0, Complement::Orthogonal, 0.05).unwrap();
        assert!((coarse - h).abs() <= 0.05 * h);
    }

    #[test]
    fn flat_disks_have_zero_curvature() {
        let cat = Cat::new();
        let x = Point::new(vec![0.3, 0.2]);
        let d = make_disk(&cat, &x, &cat.splitting(&x).unwrap().f, 0.1, 101).unwrap();
        assert!(holder_curvature(&d, 1.0, Complement::Stable(&cat)).unwrap() < 1e-9);
        assert!(holder_curvature(&d, 1.0, Complement::Orthogonal).unwrap() < 1e-9);
    }

    #[test]
    fn cat_constants_have_no_nonlinearity() {
        let h = measure_constants_h(
            &Cat::new(),
            &ConstantsGrid {
                points: 16,
                horizon: 50,
                ..ConstantsGrid::default()
            },
            1.0,
        )
        .unwrap();
        let c = CurvatureConstants::measure(&Cat::new(), &h, &ScanGrid::default()).unwrap();
        assert_eq!(c.l1, 0.0);
        assert_eq!(c.script_l, 0.0);
    }

    #[test]
    fn perturbed_cat_recursion_holds() {
        let p = PerturbedCat::new(0.01).unwrap();
        let h = measure_constants_h(
            &p,
            &ConstantsGrid {
                points: 32,
                horizon: 100,
                ..ConstantsGrid::default()
            },
            1.0,
        )
        .unwrap();
        let c = CurvatureConstants::measure(&p, &h, &ScanGrid::default()).unwrap();
        let expected_l1 = std::f64::consts::TAU.powi(2) * 0.01;
        assert!(
            c.l1 >= expected_l1 * 0.9 && c.l1 <= expected_l1 * SCAN_SAFETY * 1.01,
            "{c:?}"
        );
        let x = Point::new(vec![0.41, 0.13]);
        let d = make_disk(&p, &x, &p.splitting(&x).unwrap().f, 0.1, 201).unwrap();
        let carved = hyperbolic_component(&p, &d, 10, 0.05).unwrap();
        let rep = curvature_recursion(&p, &carved, 10, &c).unwrap();
        assert!(rep.holds(0.05), "{rep:?}");
        // a curved disk: one step obeys the single-step bound
        let curved = iterate_disk(
            &p,
            &make_disk(&p, &x, &p.splitting(&x).unwrap().f, 0.02, 201).unwrap(),
            2,
        )
        .unwrap();
        let step = single_step_curvature(&p, &curved, &c).unwrap();
        assert!(step.before > 0.0);
        assert!(step.after <= step.bound * 1.05, "{step:?}");
    }

    #[test]
    fn steep_tangents_are_degenerate() {
        let d = arc(101, 1.2);
        assert!(matches!(
            holder_curvature_within(&d, 1.0, Complement::Orthogonal, 10.0),
            Err(Error::DegenerateTangent { .. })
        ));
    }
}
