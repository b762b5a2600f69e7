use std::f64::consts::TAU;
use std::sync::OnceLock;

use nalgebra::DVector;

use super::linear::LinearTorusMap;
use super::splitting::{converge_frames, scan_system_constants};
use crate::dynamics::{Chart, LinearMap, MapSystem, Point, Splitting, SplittingCache, SplittingKind, SystemConstants};
use crate::error::{Error, Result};

pub const PERTURBED_CAT_MAX_EPS: f64 = 0.05;
pub const PERTURBED_CAT_DEPTH: usize = 40;

/// `f(x) = (2x₁ + x₂ + ε·sin 2πx₁, x₁ + x₂) mod 1`.
#[derive(Debug)]
pub struct PerturbedCat {
    eps: f64,
    chart: Chart,
    linear: LinearTorusMap,
    cache: SplittingCache,
    constants: OnceLock<SystemConstants>,
}

impl PerturbedCat {
    pub fn new(eps: f64) -> Result<Self> {
        if !(0.0..=PERTURBED_CAT_MAX_EPS).contains(&eps) {
            return Err(Error::ConstructionFailed(format!(
                "perturbed_cat: eps = {eps} outside [0, {PERTURBED_CAT_MAX_EPS}]"
            )));
        }
        Ok(Self {
            eps,
            chart: Chart::Torus { dim: 2 },
            linear: LinearTorusMap::cat(),
            cache: SplittingCache::new(),
            constants: OnceLock::new(),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Solves `t + ε·sin 2πt = c (mod 1)` for `t ∈ [0, 1)`.
    fn solve_first(&self, c: f64) -> f64 {
        let c = c.rem_euclid(1.0);
        if self.eps == 0.0 {
            return c;
        }
        // g(t) = t + ε sin 2πt − c is increasing with g(c − ε) ≤ 0 ≤ g(c + ε)
        let (mut lo, mut hi) = (c - self.eps, c + self.eps);
        let mut t = c;
        for _ in 0..100 {
            let g = t + self.eps * (TAU * t).sin() - c;
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let dg = 1.0 + TAU * self.eps * (TAU * t).cos();
            let mut next = t - g / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-17 * (1.0 + t.abs()) {
                t = next;
                break;
            }
            t = next;
        }
        t
    }
}

impl MapSystem for PerturbedCat {
    fn name(&self) -> &str {
        "perturbed_cat"
    }

    fn chart(&self) -> &Chart {
        &self.chart
    }

    fn dim_f(&self) -> usize {
        1
    }

    fn forward(&self, x: &Point) -> Point {
        let (a, b) = (x.coords()[0], x.coords()[1]);
        self.chart
            .wrapped(DVector::from_vec(vec![2.0 * a + b + self.eps * (TAU * a).sin(), a + b]))
    }

    fn inverse(&self, y: &Point) -> Point {
        let (p, q) = (y.coords()[0], y.coords()[1]);
        let a = self.solve_first(p - q);
        self.chart.wrapped(DVector::from_vec(vec![a, q - a]))
    }

    fn tangent(&self, x: &Point) -> LinearMap {
        let a = x.coords()[0];
        LinearMap::from_rows(2, 2, &[2.0 + TAU * self.eps * (TAU * a).cos(), 1.0, 1.0, 1.0])
    }

    fn forward_offset(&self, x: &Point, delta: &DVector<f64>) -> DVector<f64> {
        let a = TAU * x.coords()[0];
        let h = TAU * delta[0];
        // sin(a + h) − sin(a) without cancellation
        let dsin = 2.0 * (a + 0.5 * h).cos() * (0.5 * h).sin();
        DVector::from_vec(vec![2.0 * delta[0] + delta[1] + self.eps * dsin, delta[0] + delta[1]])
    }

    fn splitting(&self, x: &Point) -> Result<Splitting> {
        if self.eps == 0.0 {
            return self.linear.splitting(x);
        }
        self.cache
            .get_or_try_insert(x, || converge_frames(self, x, PERTURBED_CAT_DEPTH))
    }

    fn splitting_guess(&self, x: &Point) -> Result<Splitting> {
        self.linear.splitting(x)
    }

    fn splitting_kind(&self) -> SplittingKind {
        SplittingKind::Converged {
            tolerance: 1e-12,
            depth: PERTURBED_CAT_DEPTH,
        }
    }

    fn constants(&self) -> &SystemConstants {
        self.constants.get_or_init(|| {
            scan_system_constants(self, 1024, 1.0, 1.0).expect("perturbed cat splitting is defined everywhere")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{cocycle_logs, invariance_residual};
    use crate::models::{converge_splitting, Cat};

    #[test]
    fn zero_eps_matches_cat() {
        let p = PerturbedCat::new(0.0).unwrap();
        let cat = Cat::new();
        let x = Point::new(vec![0.37, 0.11]);
        let a = cocycle_logs(&p, &x, 40).unwrap();
        let b = cocycle_logs(&cat, &x, 40).unwrap();
        for (u, v) in a.log_f_inv().iter().zip(b.log_f_inv()) {
            assert!((u - v).abs() < 1e-12);
        }
        for (u, v) in a.log_e().iter().zip(b.log_e()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_round_trips() {
        let p = PerturbedCat::new(0.05).unwrap();
        for i in 0..100 {
            let x = Point::new(vec![(i as f64 * 0.0731) % 1.0, (i as f64 * 0.191) % 1.0]);
            let y = p.inverse(&p.forward(&x));
            assert!(p.chart().distance(&x, &y) < 1e-12, "{x:?} {y:?}");
        }
    }

    #[test]
    fn offsets_agree_with_direct_differences() {
        let p = PerturbedCat::new(0.03).unwrap();
        let x = Point::new(vec![0.2, 0.9]);
        let d = DVector::from_vec(vec![1e-3, -2e-3]);
        let direct = p
            .chart()
            .delta(&p.forward(&x), &p.forward(&p.chart().translate(&x, &d)));
        assert!((p.forward_offset(&x, &d) - direct).norm() < 1e-14);
    }

    #[test]
    fn splitting_converges_and_is_invariant() {
        let p = PerturbedCat::new(0.01).unwrap();
        let x = Point::new(vec![0.61, 0.28]);
        let (_, _, residual) = converge_splitting(&p, &x, 40).unwrap();
        assert!(residual < 1e-12, "{residual}");
        assert!(invariance_residual(&p, &x).unwrap() < 1e-10);
        let (_, _, r1) = converge_splitting(&p, &x, 1).unwrap();
        let (_, _, r2) = converge_splitting(&p, &x, 2).unwrap();
        assert!(r2 < r1);
    }

    #[test]
    fn rejects_large_eps() {
        assert!(matches!(PerturbedCat::new(0.06), Err(Error::ConstructionFailed(_))));
    }
}
