//! Sequence algorithms on cocycles: Pliss-time selection, hyperbolic-time
//! detection, the infinite-horizon shift, finite-horizon `Λ_{λ,N}`
//! membership and the Pliss density constant.
//!
//! All prefix sums use compensated accumulation. Ties (a window sum exactly
//! on its threshold) satisfy the inequality.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::{prefix_sums, CompensatedSum};

/// Constants `C0 ≥ C1 > C2 ≥ 0` of the Pliss lemma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlissParams {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl PlissParams {
    pub fn new(c0: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(c0.is_finite() && c1.is_finite() && c2.is_finite()) || !(c0 >= c1 && c1 > c2 && c2 >= 0.0) {
            return Err(Error::hypothesis(format!(
                "Pliss constants must satisfy C0 >= C1 > C2 >= 0, got C0={c0}, C1={c1}, C2={c2}"
            )));
        }
        Ok(Self { c0, c1, c2 })
    }

    /// `θ = (C1 − C2) / (C0 − C2)`.
    pub fn theta(&self) -> f64 {
        (self.c1 - self.c2) / (self.c0 - self.c2)
    }
}

/// Indices `m ∈ 1..=N` at which the partial sums of `increments` reach a
/// (non-strict) running maximum over all earlier partial sums, `S(0) = 0`
/// included.
fn record_highs(increments: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut acc = CompensatedSum::new();
    let mut best = 0.0_f64;
    let mut out = Vec::new();
    for (idx, d) in increments.enumerate() {
        acc.add(d);
        let s = acc.value();
        if s >= best {
            out.push(idx + 1);
        }
        best = best.max(s);
    }
    out
}

/// All `n_i ∈ 1..=N` with `Σ_{j=n+1}^{n_i} b_j ≥ C2·(n_i − n)` for every
/// `0 ≤ n < n_i`.
///
/// The hypotheses `b_j ≤ C0` and `Σ b_j ≥ C1·N` are checked; under them the
/// count exceeds `θN` except in the saturated case `b ≡ C0 = C1` where it
/// equals `N = θN`.
pub fn pliss_times(b: &[f64], params: &PlissParams) -> Result<Vec<usize>> {
    if let Some((j, v)) = b.iter().enumerate().find(|(_, v)| !v.is_finite() || **v > params.c0) {
        return Err(Error::hypothesis(format!(
            "b_{} = {v} exceeds C0 = {}",
            j + 1,
            params.c0
        )));
    }
    let total: f64 = b.iter().copied().collect::<CompensatedSum>().value();
    let required = params.c1 * b.len() as f64;
    if total < required {
        return Err(Error::hypothesis(format!(
            "sum of b = {total} is below C1·N = {required}"
        )));
    }
    Ok(record_highs(b.iter().map(|v| v - params.c2)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperbolicTimeReport {
    pub times: Vec<usize>,
    pub sigma: f64,
    pub horizon: usize,
    pub density: f64,
}

impl HyperbolicTimeReport {
    pub fn count(&self) -> usize {
        self.times.len()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.times.binary_search(&n).is_ok()
    }

    pub fn first_at_least(&self, n: usize) -> Option<usize> {
        let idx = self.times.partition_point(|&t| t < n);
        self.times.get(idx).copied()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    Ok(())
}

/// `σ`-hyperbolic times: `n` such that
/// `Π_{j=n-k+1}^{n} ‖Df⁻¹|F(f^j x)‖ ≤ σ^k` for all `1 ≤ k ≤ n`.
///
/// Runs in `O(N)`: `n` qualifies iff `S(m) − m·log σ` at `m = n` is a running
/// minimum, where `S` is the prefix sum of `log_f_inv`.
pub fn hyperbolic_times(log_f_inv: &[f64], sigma: f64) -> Result<HyperbolicTimeReport> {
    check_sigma(sigma)?;
    let log_sigma = sigma.ln();
    let times = record_highs(log_f_inv.iter().map(|l| log_sigma - l));
    let horizon = log_f_inv.len();
    let density = if horizon == 0 {
        0.0
    } else {
        times.len() as f64 / horizon as f64
    };
    Ok(HyperbolicTimeReport {
        times,
        sigma,
        horizon,
        density,
    })
}

/// Given `Σ_{i=1}^n a_i ≥ 0` for every `n_good ≤ n ≤ len`, returns the
/// smallest `k ≤ n_good` with `Σ_{i=k}^n a_i ≥ 0` for every `k ≤ n ≤ len`:
/// one past the first minimizer of the prefix sums over `0..=n_good`.
pub fn first_nonneg_shift(a: &[f64], n_good: usize) -> Result<usize> {
    if n_good == 0 || n_good > a.len() {
        return Err(Error::invalid(format!("n_good = {n_good} must lie in 1..={}", a.len())));
    }
    let s = prefix_sums(a);
    if let Some(n) = (n_good..=a.len()).find(|&n| s[n] < 0.0) {
        return Err(Error::hypothesis(format!("partial sum S({n}) = {} is negative", s[n])));
    }
    let mut argmin = 0;
    for m in 1..=n_good {
        if s[m] < s[argmin] {
            argmin = m;
        }
    }
    Ok(argmin + 1)
}

/// Finite-horizon surrogate of `x ∈ Λ_{λ,n_start}`: `(1/n)·S(n) ≤ log λ`
/// for every `n_start ≤ n ≤ len`.
pub fn lambda_membership(log_f_inv: &[f64], lambda: f64, n_start: usize) -> Result<bool> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if n_start == 0 {
        return Err(Error::invalid("n_start must be at least 1"));
    }
    let log_lambda = lambda.ln();
    let mut acc = CompensatedSum::new();
    for (idx, &l) in log_f_inv.iter().enumerate() {
        acc.add(l - log_lambda);
        let n = idx + 1;
        if n >= n_start && acc.value() > 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Orbitwise core of the reduction to `Λ_{λ,1}`: for an orbit in
/// `Λ_{λ,n_good}` over the horizon, returns the shift `k − 1` with
/// `f^{k-1}(x) ∈ Λ_{λ,1}` (over the same horizon).
pub fn lambda_one_shift(log_f_inv: &[f64], lambda: f64, n_good: usize) -> Result<usize> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let log_lambda = lambda.ln();
    let a: Vec<f64> = log_f_inv.iter().map(|l| log_lambda - l).collect();
    Ok(first_nonneg_shift(&a, n_good)? - 1)
}

/// Pliss density for hyperbolic times: `C1 = −log σ₁`, `C2 = −log σ₂`,
/// `C0 = c0`, giving `θ = (log σ₂ − log σ₁) / (log σ₂ + c0)`.
pub fn density_theta(sigma1: f64, sigma2: f64, c0: f64) -> Result<f64> {
    if !(sigma1 > 0.0 && sigma1 < sigma2 && sigma2 < 1.0) {
        return Err(Error::hypothesis(format!(
            "need 0 < sigma1 < sigma2 < 1, got sigma1={sigma1}, sigma2={sigma2}"
        )));
    }
    let c1 = -sigma1.ln();
    // C0 = C1 up to rounding is the saturated case θ = 1.
    let c0 = if (c0 - c1).abs() <= 1e-12 * c1 { c1 } else { c0 };
    let params = PlissParams::new(c0, c1, -sigma2.ln())?;
    Ok(params.theta())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Definitional `O(N²)` check of every window.
    fn pliss_oracle(b: &[f64], c2: f64) -> Vec<usize> {
        (1..=b.len())
            .filter(|&ni| (0..ni).all(|n| b[n..ni].iter().sum::<f64>() >= c2 * (ni - n) as f64))
            .collect()
    }

    fn hyperbolic_oracle(l: &[f64], sigma: f64) -> Vec<usize> {
        (1..=l.len())
            .filter(|&n| (1..=n).all(|k| l[n - k..n].iter().map(|v| v.exp()).product::<f64>() <= sigma.powi(k as i32)))
            .collect()
    }

    #[test]
    fn pliss_constant_sequence_selects_everything() {
        let p = PlissParams::new(1.5, 1.0, 0.5).unwrap();
        assert_eq!(pliss_times(&[1.0, 1.0, 1.0], &p).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn pliss_alternating_example() {
        let b = [2.0, 0.0, 2.0, 0.0, 2.0];
        let p = PlissParams::new(2.0, 1.2, 1.0).unwrap();
        let times = pliss_times(&b, &p).unwrap();
        assert_eq!(times, pliss_oracle(&b, 1.0));
        assert_eq!(times, vec![1, 3, 5]);
        assert!(times.len() as f64 > p.theta() * b.len() as f64);
        assert_relative_eq!(p.theta() * 5.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pliss_cat_cocycle() {
        let lu = (3.0 + 5f64.sqrt()) / 2.0;
        let b = vec![lu.ln(); 100];
        let p = PlissParams::new(1.0, 0.96, 0.5).unwrap();
        assert_eq!(pliss_times(&b, &p).unwrap(), (1..=100).collect::<Vec<_>>());
    }

    #[test]
    fn pliss_reports_violated_hypotheses() {
        let p = PlissParams::new(1.0, 0.5, 0.1).unwrap();
        let err = pliss_times(&[2.0, 0.0], &p).unwrap_err().to_string();
        assert!(err.contains("exceeds C0"), "{err}");
        let err = pliss_times(&[0.1, 0.1], &p).unwrap_err().to_string();
        assert!(err.contains("below C1"), "{err}");
        assert!(PlissParams::new(1.0, 0.5, 0.5).is_err());
        assert!(PlissParams::new(0.4, 0.5, 0.1).is_err());
    }

    #[test]
    fn pliss_ties_on_dyadic_sequences_match_oracle() {
        // multiples of 1/8 keep every window sum exact, so ties really occur
        let b: Vec<f64> = [3, -1, 2, 2, -4, 5, 1, 1, -2, 3]
            .iter()
            .map(|&k| k as f64 / 8.0)
            .collect();
        let p = PlissParams::new(5.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0 - 1.0 / 64.0).unwrap();
        for c2 in [0.0, 1.0 / 8.0 - 1.0 / 64.0] {
            let q = PlissParams { c2, ..p };
            assert_eq!(pliss_times(&b, &q).unwrap(), pliss_oracle(&b, c2));
        }
    }

    #[test]
    fn hyperbolic_time_examples() {
        let r = hyperbolic_times(&[0.3f64.ln(); 20], 0.5).unwrap();
        assert_eq!(r.times, (1..=20).collect::<Vec<_>>());
        assert_eq!(r.density, 1.0);

        let l = [0.9f64.ln(), 0.1f64.ln()];
        let r = hyperbolic_times(&l, 0.5).unwrap();
        assert_eq!(r.times, vec![2]);
        assert_eq!(r.times, hyperbolic_oracle(&l, 0.5));

        let r = hyperbolic_times(&[2f64.ln(); 10], 0.99).unwrap();
        assert!(r.times.is_empty());
        assert_eq!(r.density, 0.0);
    }

    #[test]
    fn hyperbolic_times_reject_bad_sigma() {
        assert!(hyperbolic_times(&[0.0], 1.0).is_err());
        assert!(hyperbolic_times(&[0.0], 0.0).is_err());
    }

    #[test]
    fn shift_examples() {
        assert_eq!(first_nonneg_shift(&[1.0, 1.0, 1.0], 1).unwrap(), 1);
        assert_eq!(first_nonneg_shift(&[-1.0, 2.0, -1.0, 1.0], 2).unwrap(), 2);
        assert_eq!(first_nonneg_shift(&[-3.0, 1.0, 1.0, 1.0, 1.0], 5).unwrap(), 2);
    }

    #[test]
    fn shift_rejects_failed_hypothesis() {
        assert!(matches!(
            first_nonneg_shift(&[1.0, -3.0, 1.0], 1),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn lambda_membership_examples() {
        let lu = (3.0 + 5f64.sqrt()) / 2.0;
        assert!(lambda_membership(&vec![-lu.ln(); 50], 0.5, 1).unwrap());
        assert!(!lambda_membership(&[0.0; 10], 0.9, 1).unwrap());
        let mut l = vec![0.5];
        l.extend(std::iter::repeat_n(-2.0, 20));
        let lambda = (-1f64).exp();
        assert!(!lambda_membership(&l, lambda, 1).unwrap());
        // (0.5 - 2)/2 = -0.75 > -1, so n = 2 still fails; from n = 3 on it holds
        assert!(!lambda_membership(&l, lambda, 2).unwrap());
        assert!(lambda_membership(&l, lambda, 3).unwrap());
    }

    #[test]
    fn lambda_one_shift_lands_in_lambda_one() {
        let l = [0.5, -2.0, -2.0, -2.0, -2.0, -2.0];
        let lambda = (-1f64).exp();
        let shift = lambda_one_shift(&l, lambda, 3).unwrap();
        assert_eq!(shift, 1);
        assert!(lambda_membership(&l[shift..], lambda, 1).unwrap());
    }

    #[test]
    fn density_theta_examples() {
        let t = density_theta((-2f64).exp(), (-1f64).exp(), 3.0).unwrap();
        assert_relative_eq!(t, 0.5, epsilon = 1e-12);

        let s2 = 0.5f64;
        let gap = s2 - 0.1;
        let t = density_theta(s2 - 1e-4 * gap, s2, 3.0).unwrap();
        assert!(t < 0.01 && t > 0.0);

        let s1 = 0.2f64;
        assert_relative_eq!(density_theta(s1, 0.5, -s1.ln()).unwrap(), 1.0, epsilon = 1e-12);
        assert!(density_theta(0.5, 0.4, 3.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pliss_matches_oracle(b in prop::collection::vec(-1.0f64..2.0, 1..60), c2 in 0.0f64..1.0) {
                let c0 = b.iter().copied().fold(f64::MIN, f64::max).max(c2 + 1e-3);
                let mean = b.iter().sum::<f64>() / b.len() as f64;
                prop_assume!(mean > c2);
                let p = PlissParams::new(c0, mean.min(c0) * (1.0 - 1e-12), c2).unwrap();
                prop_assume!(p.c1 > c2);
                prop_assert_eq!(pliss_times(&b, &p).unwrap(), pliss_oracle(&b, c2));
            }

            #[test]
            fn hyperbolic_times_match_oracle(l in prop::collection::vec(-2.0f64..1.0, 1..40), sigma in 0.05f64..0.95) {
                prop_assert_eq!(hyperbolic_times(&l, sigma).unwrap().times, hyperbolic_oracle(&l, sigma));
            }

            #[test]
            fn hyperbolic_times_are_monotone_in_sigma(l in prop::collection::vec(-2.0f64..1.0, 1..80), s in 0.05f64..0.9, ds in 0.0f64..0.09) {
                let small = hyperbolic_times(&l, s).unwrap();
                let large = hyperbolic_times(&l, s + ds).unwrap();
                prop_assert!(small.times.iter().all(|t| large.contains(*t)));
            }

            #[test]
            fn shift_is_minimal(a in prop::collection::vec(-1.0f64..1.0, 2..40), n_frac in 0.0f64..1.0) {
                let n_good = 1 + ((a.len() - 1) as f64 * n_frac) as usize;
                let s = crate::sum::prefix_sums(&a);
                prop_assume!((n_good..=a.len()).all(|n| s[n] >= 0.0));
                let k = first_nonneg_shift(&a, n_good).unwrap();
                let ok = |k: usize| (k..=a.len()).all(|n| a[k - 1..n].iter().sum::<f64>() >= -1e-12);
                prop_assert!(ok(k));
                prop_assert!((1..k).all(|j| !(j..=a.len()).all(|n| a[j - 1..n].iter().sum::<f64>() >= 1e-12)));
            }
        }
    }
}
