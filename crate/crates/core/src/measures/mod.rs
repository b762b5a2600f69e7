//! Empirical measures built from pushed-forward disks, Birkhoff averages and
//! weak-* diagnostics on a fixed family of test functions.

mod observable;
mod packing;

use std::io::Write;

use serde::Serialize;

use crate::disks::EmbeddedDisk;
use crate::dynamics::{Chart, MapSystem, Point};
use crate::error::{Error, Result};
use crate::parallel::{par_map, try_par_map};
use crate::qmc::{unit_cube_points, SamplingKind};
use crate::sum::{tree_sum, CompensatedSum};

pub use observable::{trig_tests, Observable};
pub use packing::{
    hyperbolic_mass, select_disjoint_balls, select_disjoint_on_line, HyperbolicMass, HyperbolicMassParams,
};

/// Atoms per reduction chunk. Fixed so that sums do not depend on the
/// worker count.
const CHUNK: usize = 4096;

/// Finite weighted sum of point masses, stored column-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl EmpiricalMeasure {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
            weights: Vec::new(),
            total: 0.0,
        }
    }

    /// Builds a measure from atoms; weights must be non-negative.
    pub fn from_atoms(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if coords.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * weights.len(),
                got: coords.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::invalid(format!("negative or NaN weight {w}")));
        }
        let total = chunked_sum(&weights, |w| *w);
        Ok(Self {
            dim,
            coords,
            weights,
            total,
        })
    }

    pub fn dirac(x: &Point) -> Self {
        Self::from_atoms(x.dim(), x.as_slice().to_vec(), vec![1.0]).expect("one atom")
    }

    /// Midpoint grid with `per_axis` cells per axis, total mass 1, on a
    /// torus or box chart.
    pub fn lebesgue_grid(chart: &Chart, per_axis: usize) -> Result<Self> {
        if matches!(chart, Chart::SolidTorus { .. }) || per_axis == 0 {
            return Err(Error::invalid(
                "lebesgue_grid needs a torus or box chart and per_axis ≥ 1",
            ));
        }
        let dim = chart.dim();
        let bounds = chart.bounds();
        let count = per_axis.pow(dim as u32);
        let mut coords = Vec::with_capacity(count * dim);
        for idx in 0..count {
            let mut rest = idx;
            for (lo, hi) in &bounds {
                let k = rest % per_axis;
                rest /= per_axis;
                coords.push(lo + (hi - lo) * (k as f64 + 0.5) / per_axis as f64);
            }
        }
        Self::from_atoms(dim, coords, vec![1.0 / count as f64; count])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// `∫ φ dμ` (not normalized by the total).
    pub fn integrate(&self, obs: &Observable) -> f64 {
        let idx: Vec<usize> = (0..self.len()).collect();
        chunked_sum(&idx, |&i| self.weights[i] * obs.eval_coords(self.atom(i)))
    }

    /// `f_*μ`: every atom moved by `f`, weights untouched.
    pub fn pushforward(&self, sys: &dyn MapSystem) -> Result<Self> {
        let idx: Vec<usize> = (0..self.len()).collect();
        let moved = try_par_map(&idx, |&i| {
            let y = sys.forward(&Point::new(self.atom(i).to_vec()));
            if sys.contains(&y) {
                Ok(y)
            } else {
                Err(Error::OrbitEscaped { step: 1 })
            }
        })?;
        Ok(Self {
            dim: self.dim,
            coords: moved.iter().flat_map(|p| p.as_slice().to_vec()).collect(),
            weights: self.weights.clone(),
            total: self.total,
        })
    }

    /// Columnar text: `x0,…,x{d-1},weight`, 17 significant digits.
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut header: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        header.push("weight".into());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.atom(i).iter().map(|v| format!("{v:.16e}")).collect();
            row.push(format!("{:.16e}", self.weights[i]));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Sum of `f` over `items` in fixed chunks: compensated within a chunk,
/// pairwise tree across chunks.
fn chunked_sum<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync + Send) -> f64 {
    let chunks: Vec<&[T]> = items.chunks(CHUNK).collect();
    let partial = par_map(&chunks, |c| c.iter().map(&f).collect::<CompensatedSum>().value());
    tree_sum(&partial)
}

/// `μ_n = (1/n)·Σ_{i<n} f^i_* Leb_D` on the samples of `d`: atoms
/// `f^i(y_s)` with weight `w_s/n`, where `w_s` are the normalized cell
/// weights of `d` itself. Atoms are ordered by sample, then by time.
pub fn pushforward_average(sys: &dyn MapSystem, d: &EmbeddedDisk, n: usize) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::invalid("pushforward_average needs n ≥ 1"));
    }
    let cells = d.cell_weights();
    let mass = tree_sum(&cells);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let dim = sys.dim();
    let idx: Vec<usize> = (0..d.len()).collect();
    let orbits = try_par_map(&idx, |&s| -> Result<Vec<f64>> {
        let mut y = d.point(s);
        let mut out = Vec::with_capacity(n * dim);
        for step in 0..n {
            if !sys.contains(&y) {
                return Err(Error::OrbitEscaped { step });
            }
            out.extend_from_slice(y.as_slice());
            y = sys.forward(&y);
        }
        Ok(out)
    })?;
    let mut weights = Vec::with_capacity(d.len() * n);
    for w in &cells {
        weights.extend(std::iter::repeat_n(w / mass / n as f64, n));
    }
    EmpiricalMeasure::from_atoms(dim, orbits.concat(), weights)
}

/// Normalized integrals `∫φ dμ_n` for every `n` in `checkpoints` (strictly
/// increasing) without storing atoms; entry `[c][t]` is checkpoint `c`,
/// test `t`. Equal to [`normalized_integrals`] of [`pushforward_average`]
/// up to summation order.
pub fn pushforward_integrals(
    sys: &dyn MapSystem,
    d: &EmbeddedDisk,
    checkpoints: &[usize],
    tests: &[Observable],
) -> Result<Vec<Vec<f64>>> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be positive and strictly increasing"));
    }
    let cells = d.cell_weights();
    let mass = tree_sum(&cells);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let last = *checkpoints.last().expect("non-empty");
    let idx: Vec<usize> = (0..d.len()).collect();
    // per sample: [checkpoint][test] averages
    let per_sample = try_par_map(&idx, |&s| -> Result<Vec<Vec<f64>>> {
        let mut acc = vec![CompensatedSum::new(); tests.len()];
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        let mut y = d.point(s);
        for step in 0..last {
            if !sys.contains(&y) {
                return Err(Error::OrbitEscaped { step });
            }
            for (a, t) in acc.iter_mut().zip(tests) {
                a.add(t.eval(&y));
            }
            y = sys.forward(&y);
            if step + 1 == checkpoints[next] {
                out.push(acc.iter().map(|a| a.value() / (step + 1) as f64).collect());
                next += 1;
            }
        }
        Ok(out)
    })?;
    Ok((0..checkpoints.len())
        .map(|c| {
            (0..tests.len())
                .map(|t| {
                    let terms: Vec<f64> = per_sample
                        .iter()
                        .zip(&cells)
                        .map(|(row, w)| w / mass * row[c][t])
                        .collect();
                    tree_sum(&terms)
                })
                .collect()
        })
        .collect())
}

/// `(1/n)·Σ_{i<n} φ(f^i x)` with compensated accumulation.
pub fn birkhoff(sys: &dyn MapSystem, x: &Point, obs: &Observable, n: usize) -> Result<f64> {
    Ok(birkhoff_many(sys, x, std::slice::from_ref(obs), n)?[0])
}

/// Birkhoff averages of several observables along one orbit.
pub fn birkhoff_many(sys: &dyn MapSystem, x: &Point, tests: &[Observable], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("birkhoff needs n ≥ 1"));
    }
    let mut acc = vec![CompensatedSum::new(); tests.len()];
    let mut y = x.clone();
    for step in 0..n {
        if !sys.contains(&y) {
            return Err(Error::OrbitEscaped { step });
        }
        for (a, t) in acc.iter_mut().zip(tests) {
            a.add(t.eval(&y));
        }
        y = sys.forward(&y);
    }
    Ok(acc.iter().map(|a| a.value() / n as f64).collect())
}

/// `max_φ |∫φ dμ/‖μ‖ − ∫φ dν/‖ν‖|` over `tests`.
pub fn weak_star_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, tests: &[Observable]) -> Result<f64> {
    if tests.is_empty() {
        return Err(Error::invalid("weak_star_distance needs at least one test"));
    }
    if mu.total() == 0.0 || nu.total() == 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(tests
        .iter()
        .map(|t| (mu.integrate(t) / mu.total() - nu.integrate(t) / nu.total()).abs())
        .fold(0.0, f64::max))
}

/// Per-test integrals normalized by the total mass.
pub fn normalized_integrals(mu: &EmpiricalMeasure, tests: &[Observable]) -> Result<Vec<f64>> {
    if mu.total() == 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(tests.iter().map(|t| mu.integrate(t) / mu.total()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasinSampling {
    pub kind: SamplingKind,
    pub offset: u64,
}

impl Default for BasinSampling {
    fn default() -> Self {
        Self {
            kind: SamplingKind::Kronecker,
            offset: 0,
        }
    }
}

/// Fraction of `samples` quasi-uniform points of the box `region` whose
/// Birkhoff averages over `n` iterates are within `tol` of `∫φ dμ_ref` for
/// every test. Escaping orbits count as not converged.
#[allow(clippy::too_many_arguments)]
pub fn physical_fraction(
    sys: &dyn MapSystem,
    region: &[(f64, f64)],
    mu_ref: &EmpiricalMeasure,
    tests: &[Observable],
    n: usize,
    tol: f64,
    samples: usize,
    sampling: BasinSampling,
) -> Result<f64> {
    if samples < 100 {
        return Err(Error::invalid(format!(
            "physical_fraction needs ≥ 100 samples, got {samples}"
        )));
    }
    if region.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: region.len(),
        });
    }
    let target = normalized_integrals(mu_ref, tests)?;
    physical_fraction_to(sys, region, &target, tests, n, tol, samples, sampling)
}

/// [`physical_fraction`] against given target integrals.
#[allow(clippy::too_many_arguments)]
pub fn physical_fraction_to(
    sys: &dyn MapSystem,
    region: &[(f64, f64)],
    target: &[f64],
    tests: &[Observable],
    n: usize,
    tol: f64,
    samples: usize,
    sampling: BasinSampling,
) -> Result<f64> {
    if samples < 100 {
        return Err(Error::invalid(format!(
            "physical_fraction needs ≥ 100 samples, got {samples}"
        )));
    }
    if region.len() != sys.dim() || target.len() != tests.len() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: region.len(),
        });
    }
    let points: Vec<Point> = unit_cube_points(sampling.kind, samples, sys.dim(), sampling.offset)
        .into_iter()
        .map(|u| {
            Point::new(
                u.iter()
                    .zip(region)
                    .map(|(t, (a, b))| a + t * (b - a))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let hits = par_map(&points, |x| match birkhoff_many(sys, x, tests, n) {
        Ok(avg) => avg.iter().zip(target).all(|(a, b)| (a - b).abs() <= tol),
        Err(_) => false,
    });
    Ok(hits.iter().filter(|h| **h).count() as f64 / samples as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub test: String,
    pub value: f64,
}

/// `n,test,value` rows.
pub fn write_convergence_csv(rows: &[ConvergenceRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "n,test,value")?;
    for r in rows {
        writeln!(out, "{},{},{:.16e}", r.n, r.test, r.value)?;
    }
    Ok(())
}
