use serde::Serialize;

use crate::disks::EmbeddedDisk;
use crate::dynamics::{cocycle_logs, MapSystem};
use crate::error::{Error, Result};
use crate::parallel::try_par_map;
use crate::pliss::{hyperbolic_times, lambda_membership};
use crate::sum::tree_sum;

/// Greedy maximal packing: centers are visited in index order and kept iff
/// their ball of `radius` is disjoint from every ball kept so far, i.e.
/// `dist > 2·radius`. Every center ends up within `2·radius` of a kept one.
pub fn select_disjoint_balls(count: usize, radius: f64, dist: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..count {
        if kept.iter().all(|&k| dist(i, k) > 2.0 * radius) {
            kept.push(i);
        }
    }
    kept
}

/// [`select_disjoint_balls`] for centers given by their intrinsic position
/// on a curve, visited from left to right (ties by index). Returns indices
/// into `positions`.
pub fn select_disjoint_on_line(positions: &[f64], radius: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        // sorted order: only the last kept ball can overlap
        if kept.last().is_none_or(|&k| positions[i] - positions[k] > 2.0 * radius) {
            kept.push(i);
        }
    }
    kept
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperbolicMassParams {
    /// Horizon: times `1 ≤ i < n` are examined.
    pub n: usize,
    pub sigma: f64,
    pub r1: f64,
    pub lambda1: f64,
    /// Pliss density entering the reported floor.
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperbolicMass {
    /// `(1/n)·Σ_i per_i`.
    pub eta: f64,
    /// Mass of the disjoint balls selected on `f^i(D)`, for `0 ≤ i < n`.
    pub per_i: Vec<f64>,
    /// `Leb_D` of samples in the finite-horizon `Λ_{λ1,1}`.
    pub lambda_fraction: f64,
    /// `(1/n)·Σ_i Leb_D(S_i)`.
    pub hyperbolic_fraction: f64,
    /// Selected mass over hyperbolic-time mass.
    pub tau: f64,
    pub theta: f64,
    /// `τ·θ·Leb_D(Λ ∩ D)`.
    pub floor: f64,
    pub balls: usize,
}

/// Mass of `μ_n` carried by disjoint balls of radius `r1/4` around
/// hyperbolic-time images. `S_i` is the set of samples in the finite-horizon
/// `Λ_{λ1,1}` (horizon `n`) for which `i` is a `σ`-hyperbolic time; the
/// balls are selected among `f^i(S_i)` on `f^i(D)` and weighed with the
/// pushed-forward Lebesgue measure of `D`. One-dimensional disks only.
pub fn hyperbolic_mass(sys: &dyn MapSystem, d: &EmbeddedDisk, params: &HyperbolicMassParams) -> Result<HyperbolicMass> {
    let HyperbolicMassParams {
        n,
        sigma,
        r1,
        lambda1,
        theta,
    } = *params;
    if d.dim() != 1 {
        return Err(Error::invalid("hyperbolic_mass supports one-dimensional disks"));
    }
    if n == 0 || !(r1 > 0.0) {
        return Err(Error::invalid(format!("need n ≥ 1 and r1 > 0, got n = {n}, r1 = {r1}")));
    }
    let cells = d.cell_weights();
    let mass = tree_sum(&cells);
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let weights: Vec<f64> = cells.iter().map(|c| c / mass).collect();
    let idx: Vec<usize> = (0..d.len()).collect();
    // per sample: Λ membership, hyperbolic times, speeds ‖Df^i ∂p‖ for i < n
    let rows = try_par_map(&idx, |&s| -> Result<(bool, Vec<bool>, Vec<f64>)> {
        let y = d.point(s);
        let c = cocycle_logs(sys, &y, n)?;
        let member = lambda_membership(c.log_f_inv(), lambda1, 1)?;
        let times = hyperbolic_times(c.log_f_inv(), sigma)?;
        let hyp = (0..n).map(|i| i >= 1 && times.contains(i)).collect();
        let mut v = d.jacobians()[s].column(0).into_owned();
        let mut p = y;
        let mut speeds = Vec::with_capacity(n);
        for _ in 0..n {
            speeds.push(v.norm());
            v = sys.tangent(&p).apply(&v);
            p = sys.forward(&p);
        }
        Ok((member, hyp, speeds))
    })?;
    let dp: Vec<f64> = (0..d.len() - 1)
        .map(|e| (d.params()[e + 1][0] - d.params()[e][0]).abs())
        .collect();
    let lambda_fraction = tree_sum(
        &rows
            .iter()
            .zip(&weights)
            .map(|(r, w)| if r.0 { *w } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let mut per_i = vec![0.0; n];
    let mut hyp_mass = vec![0.0; n];
    let mut balls = 0;
    for i in 1..n {
        let members: Vec<usize> = (0..d.len()).filter(|&s| rows[s].0 && rows[s].1[i]).collect();
        if members.is_empty() {
            continue;
        }
        hyp_mass[i] = tree_sum(&members.iter().map(|&s| weights[s]).collect::<Vec<_>>());
        let mut pos = vec![0.0; d.len()];
        for e in 0..d.len() - 1 {
            pos[e + 1] = pos[e] + 0.5 * (rows[e].2[i] + rows[e + 1].2[i]) * dp[e];
        }
        let centers: Vec<f64> = members.iter().map(|&s| pos[s]).collect();
        let radius = 0.25 * r1;
        let selected = select_disjoint_on_line(&centers, radius);
        balls += selected.len();
        let mut inside = vec![0.0; d.len()];
        for &k in &selected {
            let c = centers[k];
            for s in 0..d.len() {
                if (pos[s] - c).abs() <= radius {
                    inside[s] = weights[s];
                }
            }
        }
        per_i[i] = tree_sum(&inside);
    }
    let total_selected = tree_sum(&per_i);
    let total_hyp = tree_sum(&hyp_mass);
    let tau = if total_hyp > 0.0 {
        total_selected / total_hyp
    } else {
        0.0
    };
    Ok(HyperbolicMass {
        eta: total_selected / n as f64,
        per_i,
        lambda_fraction,
        hyperbolic_fraction: total_hyp / n as f64,
        tau,
        theta,
        floor: tau * theta * lambda_fraction,
        balls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disks::make_disk;
    use crate::dynamics::Point;
    use crate::models::{Cat, LinearTorusMap};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_packing(pos: &[f64], kept: &[usize], r: f64) {
        for (a, &i) in kept.iter().enumerate() {
            for &j in &kept[a + 1..] {
                assert!((pos[i] - pos[j]).abs() > 2.0 * r);
            }
        }
        for p in pos {
            assert!(kept.iter().any(|&k| (p - pos[k]).abs() <= 2.0 * r));
        }
    }

    #[test]
    fn packing_examples() {
        assert_eq!(select_disjoint_on_line(&[0.3; 7], 0.1).len(), 1);
        let spaced: Vec<f64> = (0..10).map(|i| 2.5 * 0.1 * i as f64).collect();
        assert_eq!(select_disjoint_on_line(&spaced, 0.1).len(), 10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pos: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let kept = select_disjoint_on_line(&pos, 0.05);
        assert!((10..=20).contains(&kept.len()), "{}", kept.len());
        check_packing(&pos, &kept, 0.05);
        let generic = select_disjoint_balls(pos.len(), 0.05, |a, b| (pos[a] - pos[b]).abs());
        check_packing(&pos, &generic, 0.05);
    }

    proptest! {
        #[test]
        fn packings_are_disjoint_and_maximal(pos in proptest::collection::vec(0.0f64..1.0, 1..200), r in 0.001f64..0.3) {
            check_packing(&pos, &select_disjoint_on_line(&pos, r), r);
        }
    }

    #[test]
    fn cat_mass_is_the_packing_fraction() {
        let cat = Cat::new();
        let x = Point::new(vec![0.3, 0.2]);
        let d = make_disk(&cat, &x, &cat.splitting(&x).unwrap().f, 0.1, 401).unwrap();
        let params = HyperbolicMassParams {
            n: 4,
            sigma: 0.5,
            r1: 0.1,
            lambda1: 0.4,
            theta: 0.5,
        };
        let m = hyperbolic_mass(&cat, &d, &params).unwrap();
        assert_eq!(m.lambda_fraction, 1.0);
        assert_eq!(m.per_i[0], 0.0);
        // direct count on the exact positions len·s/400 of f^i(D)
        for i in 1..4 {
            let len = 0.2 * Cat::lambda_u().powi(i as i32);
            let pos: Vec<f64> = (0..401).map(|s| len * s as f64 / 400.0).collect();
            let w = |s: usize| if s == 0 || s == 400 { 0.5 / 400.0 } else { 1.0 / 400.0 };
            let mut kept: Vec<f64> = Vec::new();
            for &p in &pos {
                if kept.iter().all(|k| p - k > 0.05) {
                    kept.push(p);
                }
            }
            let expected: f64 = (0..401)
                .filter(|&s| kept.iter().any(|k| (pos[s] - k).abs() <= 0.025))
                .map(w)
                .sum();
            assert!(
                (m.per_i[i] - expected).abs() <= 2.0 / 400.0,
                "{i}: {} vs {expected}",
                m.per_i[i]
            );
        }
        assert!(m.eta > 0.0);
    }

    #[test]
    fn contracting_toy_has_no_mass() {
        let toy = LinearTorusMap::contracting_f_toy();
        let x = Point::new(vec![0.3, 0.2]);
        let d = make_disk(&toy, &x, &toy.splitting(&x).unwrap().f, 0.1, 101).unwrap();
        let params = HyperbolicMassParams {
            n: 20,
            sigma: 0.5,
            r1: 0.1,
            lambda1: 0.9,
            theta: 0.5,
        };
        let m = hyperbolic_mass(&toy, &d, &params).unwrap();
        assert_eq!(m.eta, 0.0);
        assert_eq!(m.lambda_fraction, 0.0);
    }
}
