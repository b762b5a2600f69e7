use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use super::splitting::converge_frames;
use crate::dynamics::{
    Chart, LinearMap, MapSystem, Point, Splitting, SplittingCache, SplittingKind, Subspace, SystemConstants,
};
use crate::error::{Error, Result};

pub const SOLENOID_DEPTH: usize = 30;

/// `(φ, w) ↦ (2φ mod 2π, c·w + d·e^{iφ})` on `S¹ × ℝ²`, trapping region
/// `|w| ≤ R` with `R = √(d/(1−c) · d/c)` (strictly between the trapping
/// radius `d/(1−c)` and the injectivity radius `d/c`).
#[derive(Debug)]
pub struct Solenoid {
    c: f64,
    d: f64,
    chart: Chart,
    cache: SplittingCache,
    constants: SystemConstants,
}

impl Solenoid {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(c > 0.0 && c < 0.5) || !d.is_finite() {
            return Err(Error::ConstructionFailed(format!(
                "solenoid: need 0 < c < 1/2 and finite d, got c = {c}, d = {d}"
            )));
        }
        let ad = d.abs();
        let radius = if ad == 0.0 {
            1.0
        } else {
            (ad / (1.0 - c) * ad / c).sqrt()
        };
        // slope bound of F over the base: |u| ≤ |d| / (2 − c)
        let u_max = ad / (2.0 - c);
        let stretch = (1.0 + u_max * u_max).sqrt();
        Ok(Self {
            c,
            d,
            chart: Chart::SolidTorus { fiber_radius: radius },
            cache: SplittingCache::new(),
            constants: SystemConstants {
                b: 2.0 / stretch,
                c0: (2.0 * stretch).ln(),
                beta: 1.0,
                xi: 1.0,
            },
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn fiber_radius(&self) -> f64 {
        match self.chart {
            Chart::SolidTorus { fiber_radius } => fiber_radius,
            _ => unreachable!("solenoid chart is a solid torus"),
        }
    }

    fn fiber_plane() -> Subspace {
        Subspace::coordinate(3, &[1, 2])
    }
}

impl MapSystem for Solenoid {
    fn name(&self) -> &str {
        "solenoid"
    }

    fn chart(&self) -> &Chart {
        &self.chart
    }

    fn dim_f(&self) -> usize {
        1
    }

    fn forward(&self, x: &Point) -> Point {
        let p = x.coords();
        let phi = p[0];
        self.chart.wrapped(DVector::from_vec(vec![
            2.0 * phi,
            self.c * p[1] + self.d * phi.cos(),
            self.c * p[2] + self.d * phi.sin(),
        ]))
    }

    /// The preimage branch closest to the core circle.
    fn inverse(&self, y: &Point) -> Point {
        let p = y.coords();
        let base = 0.5 * p[0];
        let branch = |phi: f64| {
            let w1 = (p[1] - self.d * phi.cos()) / self.c;
            let w2 = (p[2] - self.d * phi.sin()) / self.c;
            (phi, w1, w2, w1 * w1 + w2 * w2)
        };
        let a = branch(base);
        let b = branch(base + PI);
        let (phi, w1, w2, _) = if a.3 <= b.3 { a } else { b };
        self.chart.wrapped(DVector::from_vec(vec![phi, w1, w2]))
    }

    fn tangent(&self, x: &Point) -> LinearMap {
        let phi = x.coords()[0];
        let (s, co) = phi.sin_cos();
        LinearMap::from_rows(
            3,
            3,
            &[
                2.0,
                0.0,
                0.0, //
                -self.d * s,
                self.c,
                0.0, //
                self.d * co,
                0.0,
                self.c,
            ],
        )
    }

    fn forward_offset(&self, x: &Point, delta: &DVector<f64>) -> DVector<f64> {
        let phi = x.coords()[0];
        let h = delta[0];
        // e^{i(φ+h)} − e^{iφ} = 2i·sin(h/2)·e^{i(φ+h/2)}
        let k = 2.0 * (0.5 * h).sin();
        let (s, co) = (phi + 0.5 * h).sin_cos();
        DVector::from_vec(vec![
            2.0 * h,
            self.c * delta[1] - self.d * k * s,
            self.c * delta[2] + self.d * k * co,
        ])
    }

    fn splitting(&self, x: &Point) -> Result<Splitting> {
        if self.d == 0.0 {
            return self.splitting_guess(x);
        }
        self.cache
            .get_or_try_insert(x, || converge_frames(self, x, SOLENOID_DEPTH))
    }

    fn splitting_guess(&self, _x: &Point) -> Result<Splitting> {
        Splitting::new(
            Self::fiber_plane(),
            Subspace::from_orthonormal(DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]))?,
        )
    }

    fn splitting_kind(&self) -> SplittingKind {
        SplittingKind::Converged {
            tolerance: 1e-8,
            depth: SOLENOID_DEPTH,
        }
    }

    fn constants(&self) -> &SystemConstants {
        &self.constants
    }
}

/// Boundary points of the trapping region mapped strictly inside it.
pub fn trapping_margin(sys: &Solenoid, samples: usize) -> f64 {
    let r = sys.fiber_radius();
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        for j in 0..samples {
            let phi = TAU * i as f64 / samples as f64;
            let ang = TAU * j as f64 / samples as f64;
            let y = sys.forward(&Point::new(vec![phi, r * ang.cos(), r * ang.sin()]));
            let w = (y.coords()[1].powi(2) + y.coords()[2].powi(2)).sqrt();
            worst = worst.min(r - w);
        }
    }
    worst
}
