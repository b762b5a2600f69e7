//! Points and the single-chart coordinate systems used by the models: flat
//! tori, the solid torus `S¹ × ℝ²` (trapping region `|w| ≤ R`) and boxes.
//! Exponential charts are the identity in these coordinates.

use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
}

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self {
            coords: DVector::from_vec(coords.into()),
        }
    }

    pub fn from_vector(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    /// Bit pattern of the coordinates, used as a memoization key.
    pub(crate) fn key(&self) -> Vec<u64> {
        self.coords.iter().map(|c| c.to_bits()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chart {
    /// `ℝ^dim / ℤ^dim`, coordinates in `[0, 1)`.
    Torus { dim: usize },
    /// `(φ, w₁, w₂)` with `φ ∈ [0, 2π)` and region `|w| ≤ fiber_radius`.
    SolidTorus { fiber_radius: f64 },
    /// Axis-aligned box, no wrapping.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

fn wrap_unit(x: f64, period: f64) -> f64 {
    let r = x - period * (x / period).floor();
    // `floor` can leave r == period for tiny negative x
    if r >= period {
        0.0
    } else {
        r
    }
}

fn min_image(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

impl Chart {
    pub fn dim(&self) -> usize {
        match self {
            Chart::Torus { dim } => *dim,
            Chart::SolidTorus { .. } => 3,
            Chart::Box { lo, .. } => lo.len(),
        }
    }

    /// Period of each coordinate (`None` for non-periodic axes).
    pub fn periods(&self) -> Vec<Option<f64>> {
        match self {
            Chart::Torus { dim } => vec![Some(1.0); *dim],
            Chart::SolidTorus { .. } => vec![Some(TAU), None, None],
            Chart::Box { lo, .. } => vec![None; lo.len()],
        }
    }

    /// Bounding interval for each coordinate of the region.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Chart::Torus { dim } => vec![(0.0, 1.0); *dim],
            Chart::SolidTorus { fiber_radius } => {
                vec![
                    (0.0, TAU),
                    (-fiber_radius, *fiber_radius),
                    (-fiber_radius, *fiber_radius),
                ]
            }
            Chart::Box { lo, hi } => lo.iter().copied().zip(hi.iter().copied()).collect(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Chart::Torus { dim } => (*dim as f64).sqrt() / 2.0,
            Chart::SolidTorus { fiber_radius } => {
                (std::f64::consts::PI.powi(2) + 4.0 * fiber_radius * fiber_radius).sqrt()
            }
            Chart::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt(),
        }
    }

    /// Reduces periodic coordinates into the fundamental domain.
    pub fn wrap(&self, p: &mut DVector<f64>) {
        for (c, period) in p.iter_mut().zip(self.periods()) {
            if let Some(t) = period {
                *c = wrap_unit(*c, t);
            }
        }
    }

    pub fn wrapped(&self, mut p: DVector<f64>) -> Point {
        self.wrap(&mut p);
        Point::from_vector(p)
    }

    /// `p ⊕ offset`: translate in chart coordinates and wrap.
    pub fn translate(&self, p: &Point, offset: &DVector<f64>) -> Point {
        self.wrapped(p.coords() + offset)
    }

    /// Minimal-image displacement `b − a`.
    pub fn delta(&self, a: &Point, b: &Point) -> DVector<f64> {
        let mut d = b.coords() - a.coords();
        for (c, period) in d.iter_mut().zip(self.periods()) {
            if let Some(t) = period {
                *c = min_image(*c, t);
            }
        }
        d
    }

    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        self.delta(a, b).norm()
    }

    /// Whether `p` lies in the closed region `Ū`.
    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim() || !p.is_finite() {
            return false;
        }
        match self {
            Chart::Torus { .. } => true,
            Chart::SolidTorus { fiber_radius } => {
                let w = (p.coords()[1].powi(2) + p.coords()[2].powi(2)).sqrt();
                w <= *fiber_radius
            }
            Chart::Box { lo, hi } => p
                .as_slice()
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(c, (a, b))| *c >= *a && *c <= *b),
        }
    }

    /// Maps a point of the unit cube `[0,1)^dim` onto the region (used for
    /// quasi-uniform sampling). For the solid torus the fiber disk is filled
    /// uniformly in area.
    pub fn from_unit_cube(&self, u: &[f64]) -> Point {
        match self {
            Chart::Torus { .. } => Point::new(u.to_vec()),
            Chart::SolidTorus { fiber_radius } => {
                let phi = TAU * u[0];
                let rad = fiber_radius * u[1].sqrt();
                let ang = TAU * u[2];
                Point::new(vec![phi, rad * ang.cos(), rad * ang.sin()])
            }
            Chart::Box { lo, hi } => Point::new(
                u.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(t, (a, b))| a + t * (b - a))
                    .collect::<Vec<_>>(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_wraps_and_uses_minimal_images() {
        let chart = Chart::Torus { dim: 2 };
        let p = chart.wrapped(DVector::from_vec(vec![1.25, -0.25]));
        assert_eq!(p.as_slice(), &[0.25, 0.75]);
        let a = Point::new(vec![0.95, 0.5]);
        let b = Point::new(vec![0.05, 0.5]);
        assert!((chart.distance(&a, &b) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn wrap_never_returns_the_period() {
        assert_eq!(wrap_unit(-1e-20, 1.0), 0.0);
        assert!(wrap_unit(-1e-17, 1.0) < 1.0);
    }

    #[test]
    fn solid_torus_region() {
        let chart = Chart::SolidTorus { fiber_radius: 1.0 };
        assert!(chart.contains(&Point::new(vec![1.0, 0.5, 0.5])));
        assert!(!chart.contains(&Point::new(vec![1.0, 0.9, 0.9])));
        assert!(!chart.contains(&Point::new(vec![f64::NAN, 0.0, 0.0])));
    }
}
