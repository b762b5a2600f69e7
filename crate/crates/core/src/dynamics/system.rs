use dashmap::DashMap;
use nalgebra::DVector;
use serde::Serialize;

use super::chart::{Chart, Point};
use super::linalg::{min_principal_angle_sine, subspace_distance, LinearMap, Subspace, ANGLE_FLOOR};
use crate::error::{Error, Result};

/// The pair `(E(x), F(x))` of complementary invariant subbundles at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Splitting {
    pub e: Subspace,
    pub f: Subspace,
}

impl Splitting {
    pub fn new(e: Subspace, f: Subspace) -> Result<Self> {
        if e.ambient() != f.ambient() {
            return Err(Error::DimensionMismatch {
                expected: e.ambient(),
                got: f.ambient(),
            });
        }
        if e.dim() + f.dim() != e.ambient() {
            return Err(Error::invalid(format!(
                "dim E + dim F = {} + {} differs from ambient dimension {}",
                e.dim(),
                f.dim(),
                e.ambient()
            )));
        }
        let angle = min_principal_angle_sine(&e, &f)?;
        if angle < ANGLE_FLOOR {
            return Err(Error::DegenerateSplitting { angle });
        }
        Ok(Self { e, f })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplittingKind {
    Exact,
    Converged { tolerance: f64, depth: usize },
}

/// Constants a system declares about its region `Ū`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemConstants {
    /// `b = inf m(Df|F)`.
    pub b: f64,
    /// `C0 = sup |log ‖Df⁻¹|F‖|`.
    pub c0: f64,
    /// Hölder exponent of `x ↦ F(x)`.
    pub beta: f64,
    /// Hölder exponent used for curvature (and for `Df`).
    pub xi: f64,
}

/// A smooth invertible map on a single chart with exact tangent maps and an
/// invariant splitting `E ⊕ F`.
pub trait MapSystem: Send + Sync {
    fn name(&self) -> &str;

    fn chart(&self) -> &Chart;

    fn dim(&self) -> usize {
        self.chart().dim()
    }

    fn dim_f(&self) -> usize;

    fn forward(&self, x: &Point) -> Point;

    fn inverse(&self, x: &Point) -> Point;

    /// `Df(x)`.
    fn tangent(&self, x: &Point) -> LinearMap;

    /// `f(x ⊕ δ) − f(x)` on the universal cover of the chart. Models
    /// override this with cancellation-free formulas so disks can be carried
    /// in local coordinates around a center orbit at any scale.
    fn forward_offset(&self, x: &Point, delta: &DVector<f64>) -> DVector<f64> {
        let fx = self.forward(x);
        let fy = self.forward(&self.chart().translate(x, delta));
        self.chart().delta(&fx, &fy)
    }

    fn splitting(&self, x: &Point) -> Result<Splitting>;

    /// Initial frames for numerical convergence of the splitting; exact
    /// systems return the splitting itself.
    fn splitting_guess(&self, x: &Point) -> Result<Splitting> {
        self.splitting(x)
    }

    fn splitting_kind(&self) -> SplittingKind;

    fn constants(&self) -> &SystemConstants;

    fn contains(&self, x: &Point) -> bool {
        self.chart().contains(x)
    }
}

/// `x, f(x), ..., fⁿ(x)`, failing with `OrbitEscaped` if an iterate leaves
/// the region.
pub fn orbit(sys: &dyn MapSystem, x: &Point, n: usize) -> Result<Vec<Point>> {
    if !sys.contains(x) {
        return Err(Error::OrbitEscaped { step: 0 });
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.clone());
    for step in 1..=n {
        let next = sys.forward(&out[step - 1]);
        if !sys.contains(&next) {
            return Err(Error::OrbitEscaped { step });
        }
        out.push(next);
    }
    Ok(out)
}

/// `fⁿ(x)` without storing the orbit.
pub fn iterate(sys: &dyn MapSystem, x: &Point, n: usize) -> Result<Point> {
    if !sys.contains(x) {
        return Err(Error::OrbitEscaped { step: 0 });
    }
    let mut y = x.clone();
    for step in 1..=n {
        y = sys.forward(&y);
        if !sys.contains(&y) {
            return Err(Error::OrbitEscaped { step });
        }
    }
    Ok(y)
}

/// Invariance residual `max(dist(Df·F(x), F(f x)), dist(Df·E(x), E(f x)))`.
pub fn invariance_residual(sys: &dyn MapSystem, x: &Point) -> Result<f64> {
    let here = sys.splitting(x)?;
    let there = sys.splitting(&sys.forward(x))?;
    let df = sys.tangent(x);
    let rf = subspace_distance(&here.f.image(&df)?, &there.f)?;
    let re = subspace_distance(&here.e.image(&df)?, &there.e)?;
    Ok(rf.max(re))
}

const CACHE_CAPACITY: usize = 1 << 18;

/// Per-point memo for numerically converged splittings. Values are pure
/// functions of the point, so clearing on overflow is unobservable.
#[derive(Debug, Default)]
pub struct SplittingCache {
    map: DashMap<Vec<u64>, Splitting>,
}

impl SplittingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_try_insert(&self, x: &Point, compute: impl FnOnce() -> Result<Splitting>) -> Result<Splitting> {
        let key = x.key();
        if let Some(hit) = self.map.get(&key) {
            return Ok(hit.clone());
        }
        let value = compute()?;
        if self.map.len() >= CACHE_CAPACITY {
            self.map.clear();
        }
        self.map.insert(key, value.clone());
        Ok(value)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
