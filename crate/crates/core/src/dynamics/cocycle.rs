//! Logarithmic derivative cocycles along an orbit segment.
//!
//! Index convention (used everywhere in the crate): entry `t` (1-based,
//! stored at `t - 1`) describes the step `f^{t-1}(x) → f^t(x)`:
//!
//! * `log_f_inv[t] = log ‖Df⁻¹|F(f^t x)‖ = −log m(Df|F(f^{t-1} x))`, so the
//!   hyperbolic-time and `Λ_{λ,N}` sums over `i = 1..n` read entries `1..n`;
//! * `log_e[t] = log ‖Df|E(f^{t-1} x)‖`, so the average-domination product
//!   `Π_{j=0}^{i-1} ‖Df|E(f^j x)‖ / m(Df|F(f^j x))` reads entries `1..i`.

use serde::Serialize;

use super::chart::Point;
use super::linalg::{restricted_mininorm, restricted_norm, LinearMap, Subspace};
use super::system::{orbit, MapSystem, SplittingKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CocycleLog {
    #[serde(skip)]
    base: Point,
    log_e: Vec<f64>,
    log_f_inv: Vec<f64>,
}

impl CocycleLog {
    pub fn from_parts(base: Point, log_e: Vec<f64>, log_f_inv: Vec<f64>) -> Result<Self> {
        if log_e.len() != log_f_inv.len() {
            return Err(Error::DimensionMismatch {
                expected: log_e.len(),
                got: log_f_inv.len(),
            });
        }
        if log_e.iter().chain(&log_f_inv).any(|v| !v.is_finite()) {
            return Err(Error::invalid("cocycle entries must be finite"));
        }
        Ok(Self { base, log_e, log_f_inv })
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.log_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_e.is_empty()
    }

    pub fn log_e(&self) -> &[f64] {
        &self.log_e
    }

    pub fn log_f_inv(&self) -> &[f64] {
        &self.log_f_inv
    }

    /// `log(‖Df|E‖ / m(Df|F))` at `f^{t-1}(x)` for `t = 1..len`.
    pub fn domination_log_ratios(&self) -> Vec<f64> {
        self.log_e.iter().zip(&self.log_f_inv).map(|(e, f)| e + f).collect()
    }

    /// Sub-segment starting at step `start + 1` (base point `f^start(x)` is
    /// not recomputed, so the base is left as the original point).
    pub fn window(&self, start: usize, len: usize) -> Result<CocycleLog> {
        if start + len > self.len() {
            return Err(Error::invalid(format!(
                "window {start}..{} exceeds cocycle length {}",
                start + len,
                self.len()
            )));
        }
        Ok(CocycleLog {
            base: self.base.clone(),
            log_e: self.log_e[start..start + len].to_vec(),
            log_f_inv: self.log_f_inv[start..start + len].to_vec(),
        })
    }

    /// Appends the cocycle of the continuation segment starting at `fⁿ(x)`.
    pub fn concat(&self, tail: &CocycleLog) -> CocycleLog {
        let mut log_e = self.log_e.clone();
        log_e.extend_from_slice(&tail.log_e);
        let mut log_f_inv = self.log_f_inv.clone();
        log_f_inv.extend_from_slice(&tail.log_f_inv);
        CocycleLog {
            base: self.base.clone(),
            log_e,
            log_f_inv,
        }
    }
}

/// `(E, F)` frames at every point of `pts` (an orbit segment with `tangents`
/// the derivatives at all but the last point).
///
/// Exact splittings are queried at every orbit point. Converged splittings
/// are queried once at each end and transported along the orbit: `F`
/// forward from the first point, `E` backward from the last, the directions
/// in which transport is contracting.
pub fn splitting_along(
    sys: &dyn MapSystem,
    pts: &[Point],
    tangents: &[LinearMap],
) -> Result<(Vec<Subspace>, Vec<Subspace>)> {
    let n = tangents.len();
    if pts.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: pts.len(),
        });
    }
    match sys.splitting_kind() {
        SplittingKind::Exact => {
            let mut es = Vec::with_capacity(n + 1);
            let mut fs = Vec::with_capacity(n + 1);
            for p in pts {
                let s = sys.splitting(p)?;
                es.push(s.e);
                fs.push(s.f);
            }
            Ok((es, fs))
        }
        SplittingKind::Converged { .. } => {
            let mut fs = Vec::with_capacity(n + 1);
            fs.push(sys.splitting(&pts[0])?.f);
            for t in 0..n {
                let next = fs[t].image(&tangents[t])?;
                fs.push(next);
            }
            let mut es = Vec::with_capacity(n + 1);
            es.push(sys.splitting(&pts[n])?.e);
            for t in (0..n).rev() {
                let prev = es[es.len() - 1].preimage(&tangents[t])?;
                es.push(prev);
            }
            es.reverse();
            Ok((es, fs))
        }
    }
}

/// Computes the cocycle of `n` steps from `x`, with splittings obtained as
/// in [`splitting_along`].
pub fn cocycle_logs(sys: &dyn MapSystem, x: &Point, n: usize) -> Result<CocycleLog> {
    let pts = orbit(sys, x, n)?;
    if n == 0 {
        return CocycleLog::from_parts(x.clone(), Vec::new(), Vec::new());
    }
    let tangents: Vec<_> = pts[..n].iter().map(|p| sys.tangent(p)).collect();
    let (e_frames, f_frames) = splitting_along(sys, &pts, &tangents)?;
    let mut log_e = Vec::with_capacity(n);
    let mut log_f_inv = Vec::with_capacity(n);
    for t in 0..n {
        log_e.push(restricted_norm(&tangents[t], &e_frames[t])?.ln());
        log_f_inv.push(-restricted_mininorm(&tangents[t], &f_frames[t])?.ln());
    }
    CocycleLog::from_parts(x.clone(), log_e, log_f_inv)
}
