//! Low-discrepancy point sets (Kronecker and Halton) and seeded
//! pseudo-random alternatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// `index`-th Halton point in `[0, 1)^dim` (dim ≤ 8).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(
        dim <= PRIMES.len(),
        "halton supports at most {} dimensions",
        PRIMES.len()
    );
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

/// Point-set families for [`unit_cube_points`].
///
/// `Kronecker` is the default: its points differ by irrational vectors.
/// Halton points differ by rationals with small denominators, which maps
/// with integer multipliers (such as angle doubling) can merge after a few
/// iterates, so burnt-in Halton samples may all land on one orbit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    #[default]
    Kronecker,
    Halton,
    Random,
}

/// Additive-recurrence steps `α_k = φ_d^{-(k+1)}`, where `φ_d` is the
/// positive root of `x^{d+1} = x + 1`.
fn kronecker_steps(dim: usize) -> Vec<f64> {
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    (0..dim).map(|k| phi.powi(-(k as i32 + 1))).collect()
}

/// Cranley–Patterson shift `frac(√p)` applied to coordinate `k` (prime `p`).
/// Raw Halton coordinates are rationals with tiny denominators; the base-2
/// ones are dyadic and fall onto periodic orbits of doubling-type maps in
/// floating point.
fn rotation(k: usize) -> f64 {
    (PRIMES[k] as f64).sqrt().fract()
}

/// `count` points of `[0, 1)^dim`. Kronecker and Halton points skip the
/// first `offset + 1` indices (Halton points are also rotated by irrational
/// shifts); random points use `ChaCha8` seeded with `offset`.
pub fn unit_cube_points(kind: SamplingKind, count: usize, dim: usize, offset: u64) -> Vec<Vec<f64>> {
    match kind {
        SamplingKind::Kronecker => {
            let steps = kronecker_steps(dim);
            (0..count as u64)
                .map(|i| {
                    let n = (offset + 1 + i) as f64;
                    steps.iter().map(|a| (0.5 + n * a).fract()).collect()
                })
                .collect()
        }
        SamplingKind::Halton => (0..count as u64)
            .map(|i| {
                halton(offset + 1 + i, dim)
                    .into_iter()
                    .enumerate()
                    .map(|(k, u)| (u + rotation(k)).fract())
                    .collect()
            })
            .collect(),
        SamplingKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(offset);
            (0..count)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
    }

    #[test]
    fn halton_points_fill_the_square_evenly() {
        let pts = unit_cube_points(SamplingKind::Halton, 1000, 2, 0);
        let quarter = pts.iter().filter(|p| p[0] < 0.5 && p[1] < 0.5).count();
        assert!((quarter as i64 - 250).abs() <= 3, "{quarter}");
    }

    #[test]
    fn kronecker_points_fill_the_cube_evenly() {
        let steps = kronecker_steps(1);
        assert!((steps[0] - 2.0 / (1.0 + 5f64.sqrt())).abs() < 1e-15);
        let pts = unit_cube_points(SamplingKind::Kronecker, 1000, 3, 0);
        let octant = pts.iter().filter(|p| p.iter().all(|u| *u < 0.5)).count();
        assert!((octant as i64 - 125).abs() <= 10, "{octant}");
    }

    #[test]
    fn kronecker_points_survive_angle_doubling() {
        // burnt-in Halton angles collapse; Kronecker angles stay apart
        let double = |mut u: f64| {
            for _ in 0..20 {
                u = (2.0 * u).fract();
            }
            u
        };
        let spread = |kind| {
            let a: Vec<f64> = unit_cube_points(kind, 4, 2, 0).iter().map(|p| double(p[0])).collect();
            a.iter().fold(0.0_f64, |m, x| m.max((x - a[0]).abs()))
        };
        assert!(spread(SamplingKind::Halton) < 1e-9);
        assert!(spread(SamplingKind::Kronecker) > 0.1);
    }

    #[test]
    fn random_points_are_seeded() {
        let a = unit_cube_points(SamplingKind::Random, 5, 3, 7);
        let b = unit_cube_points(SamplingKind::Random, 5, 3, 7);
        assert_eq!(a, b);
    }
}
