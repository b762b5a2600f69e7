//! Sampled embedded disks tangent to the `F` cone field.
//!
//! A disk is stored around a marked center orbit: each sample carries its
//! displacement from the center on the universal cover of the chart and the
//! Jacobian of the parametrization, so disks stay resolved after many
//! iterates even when they are far smaller than the chart's float spacing.
//! Disks built by [`make_disk`] remember their flat generator, which lets
//! [`hyperbolic_component`] re-evaluate the parametrization anywhere.

mod carve;
mod curvature;
mod distortion;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::dynamics::{oblique_decompose, subspace_distance, Chart, MapSystem, Point, Subspace};
use crate::error::{Error, Result};
use crate::parallel::try_par_map;

pub use carve::{backward_contraction_check, hyperbolic_component, CARVE_RAY_SAMPLES};
pub use curvature::{
    curvature_recursion, holder_curvature, holder_curvature_within, single_step_curvature, step_factors, Complement,
    CurvatureConstants, CurvatureReport, SingleStepReport, PAIR_RADIUS_FRACTION, TANGENT_ROUNDOFF,
};
pub use distortion::{distortion, distortion_profile, DistortionConstants, DistortionReport, ScanGrid, SCAN_SAFETY};

/// Refinement limits checked after every iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiskLimits {
    /// Largest admissible chord between neighboring samples.
    pub spacing_ceiling: f64,
    /// Largest admissible relative gap between a chord and the
    /// Jacobian-integrated length of the same edge.
    pub chord_tolerance: f64,
}

impl Default for DiskLimits {
    fn default() -> Self {
        Self {
            spacing_ceiling: 0.05,
            chord_tolerance: 0.05,
        }
    }
}

/// Parameter domain inside the generator's unit ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball,
    /// One-dimensional `[-minus, plus]`.
    Interval {
        minus: f64,
        plus: f64,
    },
    /// Star-shaped two-dimensional domain with extent `rho[k]` along the
    /// angle `2πk / rho.len()`, interpolated linearly in between.
    Star {
        rho: Vec<f64>,
    },
}

impl Domain {
    /// Extent along the unit parameter direction `u`.
    pub fn extent(&self, u: &DVector<f64>) -> f64 {
        match self {
            Domain::Ball => 1.0,
            Domain::Interval { minus, plus } => {
                if u[0] >= 0.0 {
                    *plus
                } else {
                    *minus
                }
            }
            Domain::Star { rho } => star_extent(rho, u[1].atan2(u[0])),
        }
    }

    /// Maps the normalized coordinate `q` (unit ball, center `0`) into the
    /// generator parameter.
    pub fn map(&self, q: &DVector<f64>) -> DVector<f64> {
        match self {
            Domain::Ball => q.clone(),
            Domain::Interval { minus, plus } => {
                let s = if q[0] >= 0.0 { *plus } else { *minus };
                q * s
            }
            Domain::Star { rho } => {
                if q.norm() == 0.0 {
                    q.clone()
                } else {
                    q * star_extent(rho, q[1].atan2(q[0]))
                }
            }
        }
    }
}

fn star_extent(rho: &[f64], angle: f64) -> f64 {
    let n = rho.len();
    let pos = angle.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * n as f64;
    let k = (pos.floor() as usize) % n;
    let frac = pos - pos.floor();
    rho[k] * (1.0 - frac) + rho[(k + 1) % n] * frac
}

/// The flat disk `p ↦ origin ⊕ radius·frame·p` a disk was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskGenerator {
    pub origin: Point,
    pub frame: DMatrix<f64>,
    pub radius: f64,
}

/// Offset from the center and parameter Jacobian of one sample.
type SampleState = (DVector<f64>, DMatrix<f64>);

impl DiskGenerator {
    /// Offsets and parameter Jacobians of `params` after `iterates` steps,
    /// together with the center `f^iterates(origin)`.
    pub(crate) fn evaluate(
        &self,
        sys: &dyn MapSystem,
        params: &[DVector<f64>],
        iterates: usize,
    ) -> Result<(Point, Vec<SampleState>)> {
        let centers = center_orbit(sys, &self.origin, iterates)?;
        let states = try_par_map(params, |p| {
            let offset = &self.frame * p * self.radius;
            let jac = &self.frame * self.radius;
            advance(sys, &centers, offset, jac)
        })?;
        Ok((centers[iterates].clone(), states))
    }
}

pub(crate) fn center_orbit(sys: &dyn MapSystem, x: &Point, n: usize) -> Result<Vec<Point>> {
    crate::dynamics::orbit(sys, x, n)
}

/// Carries one sample `(offset, jacobian)` along the center orbit `centers`.
pub(crate) fn advance(
    sys: &dyn MapSystem,
    centers: &[Point],
    mut offset: DVector<f64>,
    mut jac: DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chart = sys.chart();
    for (step, c) in centers[..centers.len() - 1].iter().enumerate() {
        let y = chart.translate(c, &offset);
        if !sys.contains(&y) {
            return Err(Error::OrbitEscaped { step });
        }
        jac = sys.tangent(&y).matrix() * jac;
        offset = sys.forward_offset(c, &offset);
    }
    let last = centers.last().expect("orbit is non-empty");
    if !sys.contains(&chart.translate(last, &offset)) {
        return Err(Error::OrbitEscaped {
            step: centers.len() - 1,
        });
    }
    Ok((offset, jac))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct EmbeddedDisk {
    dim: usize,
    resolution: usize,
    chart: Chart,
    center: Point,
    /// Normalized grid coordinates (unit ball).
    grid: Vec<DVector<f64>>,
    /// Generator parameters of the samples.
    params: Vec<DVector<f64>>,
    offsets: Vec<DVector<f64>>,
    jacobians: Vec<DMatrix<f64>>,
    tangents: Vec<Subspace>,
    center_index: usize,
    edges: Vec<Edge>,
    boundary: Vec<usize>,
    generator: Option<DiskGenerator>,
    domain: Domain,
    iterates: usize,
    limits: DiskLimits,
}

/// Normalized sample grid: `resolution` points on `[-1, 1]` per axis,
/// restricted to the unit ball in two dimensions. Returns the grid, the
/// center index, the edges (as index pairs) and the boundary samples.
#[allow(clippy::type_complexity)]
fn sample_grid(dim: usize, resolution: usize) -> (Vec<DVector<f64>>, usize, Vec<(usize, usize)>, Vec<usize>) {
    let h = 2.0 / (resolution - 1) as f64;
    let coord = |i: usize| -1.0 + h * i as f64;
    let half = (resolution - 1) / 2;
    if dim == 1 {
        let grid: Vec<_> = (0..resolution)
            .map(|i| DVector::from_vec(vec![if i == half { 0.0 } else { coord(i) }]))
            .collect();
        let edges = (0..resolution - 1).map(|i| (i, i + 1)).collect();
        return (grid, half, edges, vec![0, resolution - 1]);
    }
    let mut index = vec![usize::MAX; resolution * resolution];
    let mut grid = Vec::new();
    let mut center = 0;
    for i in 0..resolution {
        for j in 0..resolution {
            let q = DVector::from_vec(vec![
                if i == half { 0.0 } else { coord(i) },
                if j == half { 0.0 } else { coord(j) },
            ]);
            if q.norm() <= 1.0 + 1e-12 {
                if i == half && j == half {
                    center = grid.len();
                }
                index[i * resolution + j] = grid.len();
                grid.push(q);
            }
        }
    }
    let at = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i >= resolution as isize || j >= resolution as isize {
            return None;
        }
        let k = index[i as usize * resolution + j as usize];
        (k != usize::MAX).then_some(k)
    };
    let mut edges = Vec::new();
    let mut boundary = Vec::new();
    for i in 0..resolution as isize {
        for j in 0..resolution as isize {
            let Some(a) = at(i, j) else { continue };
            for (di, dj) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
                if let Some(b) = at(i + di, j + dj) {
                    edges.push((a, b));
                }
            }
            if [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(di, dj)| at(i + di, j + dj).is_none())
            {
                boundary.push(a);
            }
        }
    }
    (grid, center, edges, boundary)
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 3 || resolution.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "resolution must be odd and at least 3, got {resolution}"
        )));
    }
    Ok(())
}

/// `sqrt(det(JᵀJ))`, the area factor of the parametrization.
fn volume_factor(j: &DMatrix<f64>) -> f64 {
    (j.transpose() * j).determinant().abs().sqrt()
}

impl EmbeddedDisk {
    /// Assembles a disk from per-sample data on the standard grid of
    /// `resolution` (`offsets` relative to `center`, `jacobians` with
    /// respect to `params`).
    #[allow(clippy::too_many_arguments)]
    pub fn from_samples(
        chart: Chart,
        center: Point,
        resolution: usize,
        dim: usize,
        params: Vec<DVector<f64>>,
        offsets: Vec<DVector<f64>>,
        jacobians: Vec<DMatrix<f64>>,
        limits: DiskLimits,
    ) -> Result<Self> {
        check_resolution(resolution)?;
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("disk dimension {dim} is not 1 or 2")));
        }
        let (grid, center_index, pairs, boundary) = sample_grid(dim, resolution);
        if params.len() != grid.len() || offsets.len() != grid.len() || jacobians.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: offsets.len(),
            });
        }
        let mut disk = Self {
            dim,
            resolution,
            chart,
            center,
            grid,
            params,
            offsets,
            jacobians,
            tangents: Vec::new(),
            center_index,
            edges: pairs.into_iter().map(|(a, b)| Edge { a, b, length: 0.0 }).collect(),
            boundary,
            generator: None,
            domain: Domain::Ball,
            iterates: 0,
            limits,
        };
        disk.refresh(None)?;
        Ok(disk)
    }

    /// Rebuilds tangents and edge lengths; with `limits` also enforces the
    /// refinement limits.
    fn refresh(&mut self, limits: Option<&DiskLimits>) -> Result<()> {
        self.tangents = self
            .jacobians
            .iter()
            .map(|j| Subspace::from_spanning(j.clone()))
            .collect::<Result<Vec<_>>>()?;
        for e in self.edges.iter_mut() {
            let dp = &self.params[e.b] - &self.params[e.a];
            let la = (&self.jacobians[e.a] * &dp).norm();
            let lb = (&self.jacobians[e.b] * &dp).norm();
            e.length = 0.5 * (la + lb);
            if let Some(lim) = limits {
                let chord = (&self.offsets[e.b] - &self.offsets[e.a]).norm();
                if chord > lim.spacing_ceiling
                    || (chord - e.length).abs() > lim.chord_tolerance * e.length.max(f64::MIN_POSITIVE)
                {
                    return Err(Error::ResolutionExhausted {
                        i: e.a,
                        j: e.b,
                        spacing: chord,
                        ceiling: lim.spacing_ceiling,
                    });
                }
            }
        }
        Ok(())
    }

    fn from_generator(
        sys: &dyn MapSystem,
        generator: DiskGenerator,
        domain: Domain,
        dim: usize,
        resolution: usize,
        iterates: usize,
        limits: DiskLimits,
    ) -> Result<Self> {
        check_resolution(resolution)?;
        let (grid, _, _, _) = sample_grid(dim, resolution);
        let params: Vec<_> = grid.iter().map(|q| domain.map(q)).collect();
        let (center, states) = generator.evaluate(sys, &params, iterates)?;
        let (offsets, jacobians): (Vec<_>, Vec<_>) = states.into_iter().unzip();
        let mut disk = Self::from_samples(
            sys.chart().clone(),
            center,
            resolution,
            dim,
            params,
            offsets,
            jacobians,
            limits,
        )?;
        disk.generator = Some(generator);
        disk.domain = domain;
        disk.iterates = iterates;
        if iterates > 0 {
            disk.refresh(Some(&limits))?;
        }
        Ok(disk)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Grid step `2 / (resolution − 1)` in normalized coordinates.
    pub fn grid_step(&self) -> f64 {
        2.0 / (self.resolution - 1) as f64
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn point(&self, i: usize) -> Point {
        self.chart.translate(&self.center, &self.offsets[i])
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn offsets(&self) -> &[DVector<f64>] {
        &self.offsets
    }

    pub fn params(&self) -> &[DVector<f64>] {
        &self.params
    }

    pub fn grid(&self) -> &[DVector<f64>] {
        &self.grid
    }

    pub fn jacobians(&self) -> &[DMatrix<f64>] {
        &self.jacobians
    }

    pub fn tangents(&self) -> &[Subspace] {
        &self.tangents
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn generator(&self) -> Option<&DiskGenerator> {
        self.generator.as_ref()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn iterates(&self) -> usize {
        self.iterates
    }

    pub fn limits(&self) -> &DiskLimits {
        &self.limits
    }

    pub fn with_limits(mut self, limits: DiskLimits) -> Self {
        self.limits = limits;
        self
    }

    /// Intrinsic (mesh shortest-path) distances from sample `source`. In one
    /// dimension this is the arclength; in two it is the 8-neighbor graph
    /// distance, which overestimates geodesics off the grid axes by at most
    /// the factor `1/cos(π/8) ≈ 1.08`.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        if self.dim == 1 {
            let mut out = vec![0.0; self.len()];
            for i in source + 1..self.len() {
                out[i] = out[i - 1] + self.edges[i - 1].length;
            }
            for i in (0..source).rev() {
                out[i] = out[i + 1] + self.edges[i].length;
            }
            return out;
        }
        dijkstra(self.len(), &self.edges, source)
    }

    /// Intrinsic distance from the center to the boundary.
    pub fn inradius(&self) -> f64 {
        let d = self.distances_from(self.center_index);
        self.boundary.iter().map(|&b| d[b]).fold(f64::INFINITY, f64::min)
    }

    /// Total length of a one-dimensional disk.
    pub fn length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Lebesgue weight of each sample on the disk: trapezoid weights along a
    /// curve, Voronoi-cell area (grid cell times area factor) on a surface.
    pub fn cell_weights(&self) -> Vec<f64> {
        if self.dim == 1 {
            let mut w = vec![0.0; self.len()];
            for e in &self.edges {
                w[e.a] += 0.5 * e.length;
                w[e.b] += 0.5 * e.length;
            }
            return w;
        }
        let h = self.grid_step();
        (0..self.len())
            .map(|i| {
                let q = &self.grid[i];
                let dq = h * h;
                // parameter area of the normalized cell, through the domain map
                let scale = match &self.domain {
                    Domain::Ball => 1.0,
                    Domain::Interval { .. } => unreachable!("interval domains are one-dimensional"),
                    Domain::Star { rho } => {
                        let r = star_extent(rho, q[1].atan2(q[0]));
                        r * r
                    }
                };
                dq * scale * volume_factor(&self.jacobians[i])
            })
            .collect()
    }

    /// Largest angle (sine) between a stored tangent and the secants to its
    /// grid neighbors.
    pub fn secant_consistency(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for e in &self.edges {
            let chord = &self.offsets[e.b] - &self.offsets[e.a];
            if chord.norm() == 0.0 {
                continue;
            }
            for s in [e.a, e.b] {
                worst = worst.max(self.tangents[s].distance_to(&chord) / chord.norm());
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(n: usize, edges: &[Edge], source: usize) -> Vec<f64> {
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in edges {
        adj[e.a].push((e.b, e.length));
        adj[e.b].push((e.a, e.length));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

/// Flat disk through `x` spanned by `direction`, radius `radius`, sampled
/// at `resolution` points per axis.
pub fn make_disk(
    sys: &dyn MapSystem,
    x: &Point,
    direction: &Subspace,
    radius: f64,
    resolution: usize,
) -> Result<EmbeddedDisk> {
    make_disk_with(sys, x, direction, radius, resolution, DiskLimits::default())
}

pub fn make_disk_with(
    sys: &dyn MapSystem,
    x: &Point,
    direction: &Subspace,
    radius: f64,
    resolution: usize,
    limits: DiskLimits,
) -> Result<EmbeddedDisk> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
    }
    if direction.ambient() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: direction.ambient(),
        });
    }
    let dim = direction.dim();
    if dim != 1 && dim != 2 {
        return Err(Error::invalid(format!("disk dimension {dim} is not 1 or 2")));
    }
    if !sys.contains(x) {
        return Err(Error::ChartOverflow(format!(
            "center {:?} is outside the region",
            x.as_slice()
        )));
    }
    let min_period = sys
        .chart()
        .periods()
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
    if radius >= 0.5 * min_period {
        return Err(Error::ChartOverflow(format!(
            "radius {radius} reaches half the chart period {min_period}"
        )));
    }
    let generator = DiskGenerator {
        origin: x.clone(),
        frame: direction.frame().clone(),
        radius,
    };
    let disk = EmbeddedDisk::from_generator(sys, generator, Domain::Ball, dim, resolution, 0, limits)?;
    for i in 0..disk.len() {
        if !sys.contains(&disk.point(i)) {
            return Err(Error::ChartOverflow(format!(
                "sample {i} at {:?} is outside the region",
                disk.point(i).as_slice()
            )));
        }
    }
    Ok(disk)
}

/// `f^steps(d)`: samples pushed along the center orbit, Jacobians by the
/// tangent maps, tangents re-orthonormalized and edge lengths recomputed.
pub fn iterate_disk(sys: &dyn MapSystem, d: &EmbeddedDisk, steps: usize) -> Result<EmbeddedDisk> {
    if steps == 0 {
        return Ok(d.clone());
    }
    let centers = center_orbit(sys, &d.center, steps)?;
    let idx: Vec<usize> = (0..d.len()).collect();
    let states = try_par_map(&idx, |&i| {
        advance(sys, &centers, d.offsets[i].clone(), d.jacobians[i].clone())
    })?;
    let (offsets, jacobians): (Vec<_>, Vec<_>) = states.into_iter().unzip();
    let mut out = d.clone();
    out.center = centers[steps].clone();
    out.offsets = offsets;
    out.jacobians = jacobians;
    out.iterates = d.iterates + steps;
    out.refresh(Some(&d.limits))?;
    Ok(out)
}

/// Width of the cone around `F` containing the plane spanned by `t`:
/// `max_{v ∈ T} ‖v_E‖ / ‖v_F‖`.
fn plane_cone_width(t: &Subspace, e: &Subspace, f: &Subspace) -> Result<f64> {
    let k = t.dim();
    let mut ae = DMatrix::zeros(t.ambient(), k);
    let mut af = DMatrix::zeros(t.ambient(), k);
    for c in 0..k {
        let (ve, vf) = oblique_decompose(&t.frame().column(c).into_owned(), e, f)?;
        ae.set_column(c, &ve);
        af.set_column(c, &vf);
    }
    let m = ae.transpose() * &ae;
    let n = af.transpose() * &af;
    let Some(chol) = n.clone().cholesky() else {
        return Ok(f64::INFINITY);
    };
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or(Error::DegenerateImage { value: n.determinant() })?;
    let g = &l_inv * m * l_inv.transpose();
    let top = g.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
    Ok(top.max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangencyReport {
    /// Largest cone width of a tangent plane.
    pub max_width: f64,
    /// Largest `dist(F(y), T_y D)`.
    pub max_f_distance: f64,
    /// Whether every tangent plane lies in the given cone.
    pub within_cone: bool,
}

/// Cone width and distance to `F` of the tangent planes over all samples.
pub fn tangency_report(sys: &dyn MapSystem, d: &EmbeddedDisk, cone: &ConeSpec) -> Result<TangencyReport> {
    let idx: Vec<usize> = (0..d.len()).collect();
    let rows = try_par_map(&idx, |&i| -> Result<(f64, f64)> {
        let s = sys.splitting(&d.point(i))?;
        let t = &d.tangents[i];
        let width = plane_cone_width(t, &s.e, &s.f)?;
        let dist = if t.dim() == s.f.dim() {
            subspace_distance(&s.f, t)?
        } else {
            f64::NAN
        };
        Ok((width, dist))
    })?;
    let max_width = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_f_distance = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(TangencyReport {
        max_width,
        max_f_distance,
        within_cone: max_width <= cone.width(),
    })
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes one sample per row: normalized grid coordinates, generator
/// parameters, absolute point, offset from the center, tangent frame.
pub fn write_snapshot(d: &EmbeddedDisk, out: &mut dyn Write) -> std::io::Result<()> {
    let amb = d.chart.dim();
    let mut header: Vec<String> = Vec::new();
    header.extend((0..d.dim).map(|k| format!("q{k}")));
    header.extend((0..d.dim).map(|k| format!("p{k}")));
    header.extend((0..amb).map(|k| format!("x{k}")));
    header.extend((0..amb).map(|k| format!("offset{k}")));
    for c in 0..d.dim {
        header.extend((0..amb).map(|k| format!("t{c}_{k}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for i in 0..d.len() {
        let mut row: Vec<String> = Vec::new();
        row.extend(d.grid[i].iter().map(|v| fmt17(*v)));
        row.extend(d.params[i].iter().map(|v| fmt17(*v)));
        row.extend(d.point(i).as_slice().iter().map(|v| fmt17(*v)));
        row.extend(d.offsets[i].iter().map(|v| fmt17(*v)));
        for c in 0..d.dim {
            row.extend(d.tangents[i].frame().column(c).iter().map(|v| fmt17(*v)));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
