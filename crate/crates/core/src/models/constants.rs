//! Measured constants for the standing hypothesis chain
//! `0 < λ1 < λ1·e^{ε0} < λ2`, `λ3 = λ2·e^{ε0}/b^ξ < 1`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{cocycle_logs, iterate, restricted_mininorm, restricted_norm, MapSystem, Point};
use crate::error::{Error, Result};
use crate::parallel::try_par_map;
use crate::qmc::{unit_cube_points, SamplingKind};
use crate::sum::CompensatedSum;

/// Margin added to `log sup ‖Df|E‖` when choosing `ε0`.
pub const EPS0_MARGIN: f64 = 0.01;
/// Slack added to the log-quantile defining `λ1`, so that the sample orbit
/// realising the quantile is itself a member.
pub const LAMBDA1_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsH {
    pub eps0: f64,
    pub xi: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub alpha: f64,
    pub b: f64,
    /// Measured `sup ‖Df|E‖`.
    pub sup_e: f64,
}

impl ConstantsH {
    /// Checks `0 < λ1 < λ1·e^{ε0} < λ2`, `λ3 = λ2·e^{ε0}/b^ξ < λ4 < 1` and
    /// `0 < α < b/4`. The ordering `λ2 < λ3` is not required: it forces
    /// `b^ξ < e^{ε0}`, which no uniformly expanding `F` satisfies.
    pub fn validate(&self) -> Result<()> {
        let lo = self.lambda1 * self.eps0.exp();
        let chain = [
            ("0 < lambda1", 0.0 < self.lambda1),
            ("lambda1 < lambda1·e^eps0", self.lambda1 < lo),
            ("lambda1·e^eps0 < lambda2", lo < self.lambda2),
            ("lambda3 < 1", self.lambda3 < 1.0),
            (
                "lambda3 < lambda4 < 1",
                self.lambda3 < self.lambda4 && self.lambda4 < 1.0,
            ),
            ("0 < alpha < b/4", self.alpha > 0.0 && self.alpha < self.b / 4.0),
            ("sup ‖Df|E‖ < e^eps0", self.sup_e < self.eps0.exp()),
        ];
        for (name, ok) in chain {
            if !ok {
                return Err(Error::ChainInfeasible(format!("{name} fails for {self:?}")));
            }
        }
        let expected = self.lambda2 * self.eps0.exp() / self.b.powf(self.xi);
        if (expected - self.lambda3).abs() > 1e-12 * expected.max(1.0) {
            return Err(Error::ChainInfeasible(format!(
                "lambda3 = {} differs from lambda2·e^eps0/b^xi = {expected}",
                self.lambda3
            )));
        }
        Ok(())
    }
}

/// Sampling plan for [`measure_constants_h`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsGrid {
    /// Quasi-uniform base points.
    pub points: usize,
    /// Orbit length for the long-run averages of `log ‖Df⁻¹|F‖`.
    pub horizon: usize,
    /// Burn-in iterates before sampling (moves points onto the attractor).
    pub burn_in: usize,
    pub quantile: f64,
    pub sampling: SamplingKind,
    pub seed: u64,
}

impl Default for ConstantsGrid {
    fn default() -> Self {
        Self {
            points: 256,
            horizon: 400,
            burn_in: 20,
            quantile: 0.9,
            sampling: SamplingKind::Kronecker,
            seed: 0,
        }
    }
}

/// Sample quantile by linear interpolation of order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Measures `sup ‖Df|E‖`, `b = inf m(Df|F)` and the long-run averages of
/// `log ‖Df⁻¹|F‖` on a sample, then picks the (H) chain:
///
/// * `ε0 = max(log sup ‖Df|E‖ + 0.01, 0.01)`;
/// * `λ1 = exp(q-quantile of the averages)`, required below 1;
/// * `λ2` the midpoint of `(λ1·e^{ε0}, min(1, b^ξ·e^{-ε0}))`, `λ3 = λ2·e^{ε0}/b^ξ`;
/// * `λ4 = (λ3 + 1)/2`, `α = b/8`.
pub fn measure_constants_h(sys: &dyn MapSystem, grid: &ConstantsGrid, xi: f64) -> Result<ConstantsH> {
    if grid.points == 0 || grid.horizon == 0 {
        return Err(Error::invalid("constants grid needs points and a horizon"));
    }
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::invalid(format!("xi must lie in (0, 1], got {xi}")));
    }
    let chart = sys.chart();
    let starts: Vec<Point> = unit_cube_points(grid.sampling, grid.points, sys.dim(), grid.seed)
        .iter()
        .map(|u| chart.from_unit_cube(u))
        .collect();
    let rows = try_par_map(&starts, |x| -> Result<(f64, f64, f64)> {
        let x = iterate(sys, x, grid.burn_in)?;
        let df = sys.tangent(&x);
        let s = sys.splitting(&x)?;
        let e = restricted_norm(&df, &s.e)?;
        let m = restricted_mininorm(&df, &s.f)?;
        let c = cocycle_logs(sys, &x, grid.horizon)?;
        let avg = c.log_f_inv().iter().copied().collect::<CompensatedSum>().value() / grid.horizon as f64;
        let sup_e = c.log_e().iter().copied().fold(e.ln(), f64::max).exp();
        let inf_m = c.log_f_inv().iter().map(|l| (-l).exp()).fold(m, f64::min);
        Ok((sup_e, inf_m, avg))
    })?;
    let sup_e = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let b = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let averages: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let q = quantile(&averages, grid.quantile);
    let eps0 = (sup_e.ln() + EPS0_MARGIN).max(EPS0_MARGIN);
    let log_lambda1 = q + LAMBDA1_SLACK;
    if log_lambda1 >= 0.0 {
        return Err(Error::ChainInfeasible(format!(
            "lambda1 = exp({q:.6}) is not below 1 (sup ‖Df|E‖ = {sup_e:.6}, b = {b:.6})"
        )));
    }
    let lambda1 = log_lambda1.exp();
    let lo = lambda1 * eps0.exp();
    let hi = (b.powf(xi) / eps0.exp()).min(1.0);
    if lo >= hi {
        return Err(Error::ChainInfeasible(format!(
            "no lambda2 in (lambda1·e^eps0, min(1, b^xi·e^-eps0)) = ({lo:.6}, {hi:.6}); eps0 = {eps0:.6}, b = {b:.6}"
        )));
    }
    let lambda2 = 0.5 * (lo + hi);
    let lambda3 = lambda2 * eps0.exp() / b.powf(xi);
    let consts = ConstantsH {
        eps0,
        xi,
        lambda1,
        lambda2,
        lambda3,
        lambda4: 0.5 * (lambda3 + 1.0),
        alpha: b / 8.0,
        b,
        sup_e,
    };
    consts.validate()?;
    Ok(consts)
}
