use nalgebra::{DMatrix, DVector};

use super::linear::Cat;
use super::splitting::converge_frames;
use crate::dynamics::{
    Chart, LinearMap, MapSystem, Point, Splitting, SplittingCache, SplittingKind, Subspace, SystemConstants, DET_FLOOR,
};
use crate::error::{Error, Result};

pub const DFA_DEPTH: usize = 40;
pub const DFA_DEFAULT_DELTA: f64 = 0.05;
pub const DFA_DEFAULT_RHO: f64 = 0.2;

/// Derived-from-Anosov map: the cat map with its unstable multiplier
/// lowered to `1 + δ` at the fixed point `0`.
///
/// In orthonormal eigen-coordinates `(s, u)` around the nearest lattice
/// point, `f(s, u) = (λ_s·s, u·m(r))` with
/// `m(r) = λ_u − (λ_u − 1 − δ)·(1 − r²/ρ²)³₊`. The unstable eigenline is
/// exactly invariant; `E` is converged numerically.
#[derive(Debug)]
pub struct Dfa {
    delta: f64,
    rho: f64,
    chart: Chart,
    cat: Cat,
    v_s: DVector<f64>,
    v_u: DVector<f64>,
    /// `λ_u − 1 − δ`.
    k: f64,
    cache: SplittingCache,
    constants: SystemConstants,
}

fn min_image(x: &DVector<f64>) -> DVector<f64> {
    x.map(|c| c - c.round())
}

impl Dfa {
    pub fn new(delta: f64, rho: f64) -> Result<Self> {
        let lu = Cat::lambda_u();
        if !(delta > 0.0 && delta < lu - 1.0) {
            return Err(Error::ConstructionFailed(format!(
                "dfa: delta = {delta} outside (0, {})",
                lu - 1.0
            )));
        }
        if !(rho > 0.0 && rho < 0.5) {
            return Err(Error::ConstructionFailed(format!("dfa: rho = {rho} outside (0, 0.5)")));
        }
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let norm = (1.0 + golden * golden).sqrt();
        let k = lu - 1.0 - delta;
        // sup of the F-multiplier m + q·u² is reached on the u-axis
        let bump_excess = (0..=10_000)
            .map(|i| {
                let t = i as f64 / 10_000.0;
                (1.0 - t).powi(2) * (7.0 * t - 1.0)
            })
            .fold(0.0_f64, f64::max);
        let b = 1.0 + delta;
        let top = lu + k * bump_excess;
        let sys = Self {
            delta,
            rho,
            chart: Chart::Torus { dim: 2 },
            cat: Cat::new(),
            v_s: DVector::from_vec(vec![-1.0 / norm, golden / norm]),
            v_u: DVector::from_vec(vec![golden / norm, 1.0 / norm]),
            k,
            cache: SplittingCache::new(),
            constants: SystemConstants {
                b,
                c0: b.ln().abs().max(top.ln()),
                beta: 1.0,
                xi: 1.0,
            },
        };
        let n = 64;
        for i in 0..n {
            for j in 0..n {
                let x = Point::new(vec![i as f64 / n as f64, j as f64 / n as f64]);
                let det = sys.tangent(&x).determinant();
                if !(det > DET_FLOOR) {
                    return Err(Error::ConstructionFailed(format!(
                        "dfa: Jacobian determinant {det} at {:?} is not positive",
                        x.as_slice()
                    )));
                }
            }
        }
        Ok(sys)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn eigen(&self, d: &DVector<f64>) -> (f64, f64) {
        (self.v_s.dot(d), self.v_u.dot(d))
    }

    /// `(1 − r²/ρ²)₊` at eigen-coordinates `(s, u)`.
    fn bump_base(&self, s: f64, u: f64) -> f64 {
        (1.0 - (s * s + u * u) / (self.rho * self.rho)).max(0.0)
    }

    /// `f(d) − A·d` for a lattice representative `d`.
    fn correction(&self, d: &DVector<f64>) -> DVector<f64> {
        let (s, u) = self.eigen(d);
        let a = self.bump_base(s, u);
        &self.v_u * (-self.k * a * a * a * u)
    }

    fn lu(&self) -> f64 {
        Cat::lambda_u()
    }
}

impl MapSystem for Dfa {
    fn name(&self) -> &str {
        "dfa"
    }

    fn chart(&self) -> &Chart {
        &self.chart
    }

    fn dim_f(&self) -> usize {
        1
    }

    fn forward(&self, x: &Point) -> Point {
        let d = min_image(x.coords());
        let lin = self.cat.as_linear().matrix().apply(x.coords());
        self.chart.wrapped(lin + self.correction(&d))
    }

    fn inverse(&self, y: &Point) -> Point {
        let x0 = self.cat.inverse(y);
        let d0 = min_image(x0.coords());
        let (s0, u0) = self.eigen(&d0);
        if self.bump_base(s0, 0.0) == 0.0 || u0 == 0.0 {
            return x0;
        }
        // solve g(u) = u·m(s0, u) = λ_u·u0; g is increasing with g(u)/u in [1 + δ, λ_u]
        let target = self.lu() * u0;
        let g = |u: f64| {
            let a = self.bump_base(s0, u);
            u * (self.lu() - self.k * a * a * a) - target
        };
        let (mut lo, mut hi) = {
            let far = target / (1.0 + self.delta);
            if u0 > 0.0 {
                (u0, far)
            } else {
                (far, u0)
            }
        };
        let mut u = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gu = g(u);
            if gu > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let a = self.bump_base(s0, u);
            let dg = self.lu() - self.k * a * a * a + 6.0 * self.k * a * a * u * u / (self.rho * self.rho);
            let mut next = u - gu / dg;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 1e-17 * (1.0 + u.abs()) || hi - lo <= 1e-17 {
                u = next;
                break;
            }
            u = next;
        }
        self.chart.translate(&x0, &(&self.v_u * (u - u0)))
    }

    fn tangent(&self, x: &Point) -> LinearMap {
        let d = min_image(x.coords());
        let (s, u) = self.eigen(&d);
        let a = self.bump_base(s, u);
        let m = self.lu() - self.k * a * a * a;
        let q = 6.0 * self.k * a * a / (self.rho * self.rho);
        let j = DMatrix::from_row_slice(2, 2, &[Cat::lambda_s(), 0.0, q * s * u, m + q * u * u]);
        let p = DMatrix::from_columns(&[self.v_s.clone(), self.v_u.clone()]);
        LinearMap::new(&p * j * p.transpose()).expect("finite tangent")
    }

    fn forward_offset(&self, x: &Point, delta: &DVector<f64>) -> DVector<f64> {
        let lin = self.cat.as_linear().matrix().apply(delta);
        let d = min_image(x.coords());
        let d1 = &d + delta;
        if d1.iter().any(|c| c.abs() > 0.5) {
            // different lattice representative: difference of the periodic corrections
            return lin + self.correction(&min_image(&d1)) - self.correction(&d);
        }
        let (s, u) = self.eigen(&d);
        let (ds, du) = self.eigen(delta);
        let (s1, u1) = (s + ds, u + du);
        let rho2 = self.rho * self.rho;
        let t = (s * s + u * u) / rho2;
        let t1 = (s1 * s1 + u1 * u1) / rho2;
        let a = (1.0 - t).max(0.0);
        let a1 = (1.0 - t1).max(0.0);
        let da = if t < 1.0 && t1 < 1.0 {
            -(ds * (2.0 * s + ds) + du * (2.0 * u + du)) / rho2
        } else {
            a1 - a
        };
        let dcube = da * (a1 * a1 + a1 * a + a * a);
        // u1·a1³ − u·a³ = du·a1³ + u·(a1³ − a³)
        let dprod = du * a1 * a1 * a1 + u * dcube;
        lin - &self.v_u * (self.k * dprod)
    }

    fn splitting(&self, x: &Point) -> Result<Splitting> {
        self.cache.get_or_try_insert(x, || {
            let e = converge_frames(self, x, DFA_DEPTH)?.e;
            Splitting::new(e, Subspace::from_vector(&self.v_u)?)
        })
    }

    fn splitting_guess(&self, _x: &Point) -> Result<Splitting> {
        Splitting::new(Subspace::from_vector(&self.v_s)?, Subspace::from_vector(&self.v_u)?)
    }

    fn splitting_kind(&self) -> SplittingKind {
        SplittingKind::Converged {
            tolerance: 1e-12,
            depth: DFA_DEPTH,
        }
    }

    fn constants(&self) -> &SystemConstants {
        &self.constants
    }
}
