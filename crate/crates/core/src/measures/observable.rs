use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use crate::dynamics::{Chart, Point};

/// A bounded test function.
type Eval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Observable {
    name: String,
    bound: f64,
    reference: Option<(f64, String)>,
    eval: Eval,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .field("reference", &self.reference)
            .finish()
    }
}

impl Observable {
    /// `bound` is the declared `sup |φ|` on the region.
    pub fn new(name: impl Into<String>, bound: f64, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            bound,
            reference: None,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), c.abs(), move |_| c)
    }

    pub fn with_reference(mut self, value: f64, note: impl Into<String>) -> Self {
        self.reference = Some((value, note.into()));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Known integral and where it comes from.
    pub fn reference(&self) -> Option<(f64, &str)> {
        self.reference.as_ref().map(|(v, n)| (*v, n.as_str()))
    }

    #[inline]
    pub fn eval_coords(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x.as_slice())
    }
}

/// Integer frequency vectors in a fixed order: `e_i`, then `e_i ± e_j`
/// (`i < j`), then `2e_i`, `2e_i ± e_j`, ...
fn frequencies(dim: usize, count: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut scale = 1;
    while out.len() < count {
        for i in 0..dim {
            let mut k = vec![0; dim];
            k[i] = scale;
            out.push(k);
        }
        for i in 0..dim {
            for j in i + 1..dim {
                for s in [1, -1] {
                    let mut k = vec![0; dim];
                    k[i] = scale;
                    k[j] = s;
                    out.push(k);
                }
            }
        }
        scale += 1;
    }
    out
}

fn label(k: &[i64]) -> String {
    k.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("_")
}

/// The first `count` trigonometric test functions adapted to `chart`
/// (cosine then sine of each frequency), all bounded by 1.
///
/// On a torus these are the characters `cos 2πk·x`, `sin 2πk·x` with
/// reference integral 0 against Lebesgue. On a box the coordinates are
/// rescaled to `[0, 1]` first. On the solid torus the angle carries the
/// frequency and the fiber coordinates enter through `w/R`.
pub fn trig_tests(chart: &Chart, count: usize) -> Vec<Observable> {
    let mut out = Vec::with_capacity(count);
    match chart {
        Chart::Torus { dim } => {
            for k in frequencies(*dim, count.div_ceil(2)) {
                let kc = k.clone();
                out.push(
                    Observable::new(format!("cos[{}]", label(&k)), 1.0, move |x| (TAU * dot(&kc, x)).cos())
                        .with_reference(0.0, "nonzero character against Lebesgue"),
                );
                let ks = k.clone();
                out.push(
                    Observable::new(format!("sin[{}]", label(&k)), 1.0, move |x| (TAU * dot(&ks, x)).sin())
                        .with_reference(0.0, "nonzero character against Lebesgue"),
                );
            }
        }
        Chart::Box { lo, hi } => {
            for k in frequencies(lo.len(), count.div_ceil(2)) {
                for (kind, f) in [("cos", f64::cos as fn(f64) -> f64), ("sin", f64::sin)] {
                    let (k, lo, hi) = (k.clone(), lo.clone(), hi.clone());
                    let name = format!("{kind}[{}]", label(&k));
                    out.push(Observable::new(name, 1.0, move |x| {
                        let phase: f64 = k
                            .iter()
                            .zip(x)
                            .zip(lo.iter().zip(&hi))
                            .map(|((kc, xc), (a, b))| *kc as f64 * (xc - a) / (b - a))
                            .sum();
                        f(PI * phase)
                    }));
                }
            }
        }
        Chart::SolidTorus { fiber_radius } => {
            let r = *fiber_radius;
            let mut k = 1.0;
            while out.len() < count {
                let kk = k;
                out.push(Observable::new(format!("cos[{kk}phi]"), 1.0, move |x| {
                    (kk * x[0]).cos()
                }));
                out.push(Observable::new(format!("sin[{kk}phi]"), 1.0, move |x| {
                    (kk * x[0]).sin()
                }));
                out.push(Observable::new(format!("w1cos[{kk}phi]"), 1.0, move |x| {
                    x[1] / r * (kk * x[0]).cos()
                }));
                out.push(Observable::new(format!("w2sin[{kk}phi]"), 1.0, move |x| {
                    x[2] / r * (kk * x[0]).sin()
                }));
                k += 1.0;
            }
        }
    }
    out.truncate(count);
    out
}

fn dot(k: &[i64], x: &[f64]) -> f64 {
    k.iter().zip(x).map(|(a, b)| *a as f64 * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_tests_on_the_two_torus() {
        let t = trig_tests(&Chart::Torus { dim: 2 }, 8);
        let names: Vec<_> = t.iter().map(|o| o.name().to_string()).collect();
        assert_eq!(
            names,
            [
                "cos[1_0]",
                "sin[1_0]",
                "cos[0_1]",
                "sin[0_1]",
                "cos[1_1]",
                "sin[1_1]",
                "cos[1_-1]",
                "sin[1_-1]"
            ]
        );
        let x = Point::new(vec![0.25, 0.5]);
        assert!((t[0].eval(&x)).abs() < 1e-15);
        assert!((t[1].eval(&x) - 1.0).abs() < 1e-15);
        assert_eq!(t[6].reference().unwrap().0, 0.0);
    }

    #[test]
    fn every_chart_gets_bounded_tests() {
        let charts = [
            Chart::Torus { dim: 3 },
            Chart::SolidTorus { fiber_radius: 0.6 },
            Chart::Box {
                lo: vec![-1.0, 0.0],
                hi: vec![1.0, 2.0],
            },
        ];
        for c in charts {
            let tests = trig_tests(&c, 8);
            assert_eq!(tests.len(), 8);
            let p = c.from_unit_cube(&[0.3, 0.7, 0.9][..c.dim()]);
            for t in &tests {
                assert!(t.eval(&p).abs() <= t.bound());
            }
        }
    }
}
