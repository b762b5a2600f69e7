use std::fmt::Write;

use super::config::Experiment;
use crate::error::Result;
use crate::models::list_models;

struct Text {
    summary: &'static str,
    files: &'static [&'static str],
    assertions: &'static [&'static str],
}

fn text(e: Experiment) -> Text {
    match e {
        Experiment::PlissDemo => Text {
            summary: "Pliss times of b_j = log m(Df|F(f^{j-1}x)) along one orbit with C0 = sup b_j, \
                      C1 = mean b_j, C2 = -log sigma (sigma default 0.5).",
            files: &[
                "cocycle.csv: step,log_norm_df_e,log_norm_df_inv_f",
                "pliss_times.csv: time",
            ],
            assertions: &[
                "count_exceeds_theta_n: count > theta*N, theta = (C1-C2)/(C0-C2); count = N when C0 = C1",
                "pliss_times_are_hyperbolic_times: the Pliss times are the sigma-hyperbolic times",
            ],
        },
        Experiment::HyperbolicTimes => Text {
            summary: "sigma-hyperbolic times on quasi-random orbits (sampling.orbits, default 256) with \
                      measured constants; sigma defaults to sqrt(lambda1). Membership in the finite-horizon \
                      Lambda_{lambda1,1} is checked at N and 2N.",
            files: &[
                "orbits.csv: orbit,x0..,in_lambda,in_lambda_2n,count,density,theta",
                "hyperbolic_times.csv: orbit,time (first 8 orbits)",
            ],
            assertions: &[
                "lambda_fraction_positive: some orbit lies in Lambda_{lambda1,1}",
                "lambda_fraction_stable: the fraction moves by at most 20% from N to 2N",
                "density_meets_theta: density >= density_theta(lambda1, sigma, C0) on >= 90% of Lambda orbits",
            ],
        },
        Experiment::ConeCheck => Text {
            summary: "gamma-average domination of orbit segments (default gamma 0.5) and contraction of the \
                      cone field C_a^F (default a 0.5) to width gamma^i*a, plus the domination robustness radius.",
            files: &[
                "domination.csv: orbit,step,log_ratio",
                "cone_ratios.csv: orbit,step,ratio",
            ],
            assertions: &[
                "segments_dominated: every segment is certified",
                "cones_contract: measured width <= gamma^i*a at every step",
            ],
        },
        Experiment::DiskIterate => Text {
            summary: "A flat disk along F through the base point, iterated horizon times (default 4) with \
                      refinement on exhausted resolution.",
            files: &[
                "disk_<k>.csv: q*,p*,x*,offset*,t<c>_<k> per sample",
                "disk_steps.csv: step,length,inradius,max_cone_width,max_f_distance,secant_consistency",
            ],
            assertions: &["tangent_to_cone: every tangent plane lies in C_a^F"],
        },
        Experiment::Contraction => Text {
            summary: "Backward contraction on carved hyperbolic-time disks: for the largest sigma-hyperbolic \
                      time n <= horizon (default 50) the component of radius r (default 0.05) is compared \
                      against sigma^{k/2} times its distance at time n, for every k <= n.",
            files: &["contraction.csv: disk,n,length,max_ratio,threshold"],
            assertions: &["backward_contraction: max ratio <= 1 + 5*grid_step on every disk"],
        },
        Experiment::Distortion => Text {
            summary: "Bounded distortion of |det Df^n| along tangent planes of carved hyperbolic-time disks, \
                      sampled.pairs (default 500) pairs (y, n) with n <= horizon (default 30). The bound is \
                      𝒦 = exp(2·R1·a/(1−λ2) + R2·λ2^{β/2}/(1−λ2^{β/2})) with R1, R2 scanned on a grid.",
            files: &["distortion.csv: orbit,n,sample,distance,ratio,bound"],
            assertions: &[
                "ratios_within_bound: 1/𝒦 <= ratio <= 𝒦 for every pair",
                "pair_count: the requested number of pairs was sampled",
            ],
        },
        Experiment::Curvature => Text {
            summary: "Hoelder curvature of iterated carved disks (sampling.orbits, default 20) against \
                      H_c(f^n D) <= lambda4^n*H_c(D) + L/(1-lambda4), plus one step of the recursion on each \
                      image disk.",
            files: &[
                "curvature.csv: disk,n,initial,measured,inductive_bound,closed_bound",
                "single_step.csv: disk,before,after,bound",
            ],
            assertions: &[
                "flat_disks_have_zero_curvature: the initial flat disks measure 0",
                "n_step_bound: measured <= both bounds on every disk",
                "single_step_bound: after <= 1.05*bound",
            ],
        },
        Experiment::SrbConverge => Text {
            summary: "Pushforward averages of Lebesgue on an unstable disk at doubling checkpoints from 1000 \
                      up to the horizon (default 100000), against Lebesgue (cat) or a second disk.",
            files: &["convergence.csv: n,test,value (test 'distance' is the weak-* distance)"],
            assertions: &[
                "final_distance_below_tol: final distance < measures.distance_tol (default 0.03)",
                "distance_decreases: final distance < first distance",
            ],
        },
        Experiment::HyperbolicMass => Text {
            summary: "Mass of mu_n carried by disjoint balls of radius r1/4 around hyperbolic-time images of \
                      Lambda_{lambda1,1} samples of an unstable disk (horizon default 200), centered at the first \
                      base point in Lambda_{lambda1,1} unless disk.center is set.",
            files: &["hyperbolic_mass.csv: i,mass"],
            assertions: &["eta_positive: eta > 0"],
        },
        Experiment::PhysicalBasin => Text {
            summary: "Fraction of quasi-random points whose Birkhoff averages over the horizon (default \
                      100000) are within measures.tol of the reference integrals for every test.",
            files: &["reference.csv: test,value"],
            assertions: &["basin_fraction: fraction >= measures.min_fraction (default 0.99)"],
        },
    }
}

/// Human-readable description of an experiment by name.
pub fn describe(name: &str) -> Result<String> {
    let e = Experiment::from_name(name)?;
    let t = text(e);
    let mut out = String::new();
    let _ = writeln!(out, "{}", e.name());
    let _ = writeln!(out, "  {}", t.summary);
    let _ = writeln!(
        out,
        "  defaults: horizon {}, orbits {}, disk resolution {}",
        e.default_horizon(),
        e.default_orbits(),
        e.default_resolution()
    );
    let _ = writeln!(out, "  files:");
    for f in t.files {
        let _ = writeln!(out, "    {f}");
    }
    let _ = writeln!(out, "  assertions:");
    for a in t.assertions {
        let _ = writeln!(out, "    {a}");
    }
    Ok(out)
}

/// One block per model with its parameters.
pub fn model_listing() -> String {
    let mut out = String::new();
    for m in list_models() {
        let _ = writeln!(out, "{}: {}", m.name, m.summary);
        for p in &m.parameters {
            let _ = writeln!(out, "  {} (default {}, range {})", p.name, p.default, p.range);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn every_experiment_is_described() {
        for e in Experiment::ALL {
            assert!(describe(e.name()).unwrap().starts_with(e.name()));
        }
        assert!(describe("distortion")
            .unwrap()
            .contains("𝒦 = exp(2·R1·a/(1−λ2) + R2·λ2^{β/2}/(1−λ2^{β/2}))"));
    }

    #[test]
    fn unknown_experiments_list_the_valid_names() {
        match describe("nope") {
            Err(Error::UnknownName { valid, .. }) => assert!(valid.contains("srb_converge")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn four_models_are_listed() {
        let text = model_listing();
        assert_eq!(text.lines().filter(|l| !l.starts_with(' ')).count(), 4);
    }
}
