//! Reference systems: the cat map, its nonlinear perturbation, the
//! Smale–Williams solenoid and a derived-from-Anosov map, plus a few linear
//! toys used in tests.

mod constants;
mod dfa;
mod linear;
mod perturbed_cat;
mod solenoid;
mod splitting;

use serde::{Deserialize, Serialize};

pub use constants::{measure_constants_h, quantile, ConstantsGrid, ConstantsH, EPS0_MARGIN, LAMBDA1_SLACK};
pub use dfa::{Dfa, DFA_DEFAULT_DELTA, DFA_DEFAULT_RHO, DFA_DEPTH};
pub use linear::{Cat, LinearTorusMap};
pub use perturbed_cat::{PerturbedCat, PERTURBED_CAT_DEPTH, PERTURBED_CAT_MAX_EPS};
pub use solenoid::{trapping_margin, Solenoid, SOLENOID_DEPTH};
pub use splitting::{converge_frames, converge_splitting, scan_system_constants, RESIDUAL_FLOOR};

use crate::dynamics::MapSystem;
use crate::error::Result;

fn default_eps() -> f64 {
    0.01
}

fn default_c() -> f64 {
    0.25
}

fn default_d() -> f64 {
    0.5
}

fn default_delta() -> f64 {
    DFA_DEFAULT_DELTA
}

fn default_rho() -> f64 {
    DFA_DEFAULT_RHO
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Cat {},
    PerturbedCat {
        #[serde(default = "default_eps")]
        eps: f64,
    },
    Solenoid {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_d")]
        d: f64,
    },
    Dfa {
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "default_rho")]
        rho: f64,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Cat {} => "cat",
            ModelSpec::PerturbedCat { .. } => "perturbed_cat",
            ModelSpec::Solenoid { .. } => "solenoid",
            ModelSpec::Dfa { .. } => "dfa",
        }
    }
}

pub fn build(spec: &ModelSpec) -> Result<Box<dyn MapSystem>> {
    Ok(match *spec {
        ModelSpec::Cat {} => Box::new(Cat::new()),
        ModelSpec::PerturbedCat { eps } => Box::new(PerturbedCat::new(eps)?),
        ModelSpec::Solenoid { c, d } => Box::new(Solenoid::new(c, d)?),
        ModelSpec::Dfa { delta, rho } => Box::new(Dfa::new(delta, rho)?),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterInfo {
    pub name: &'static str,
    pub default: f64,
    pub range: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub parameters: Vec<ParameterInfo>,
}

pub fn list_models() -> Vec<ModelInfo> {
    vec![
        ModelInfo {
            name: "cat",
            summary: "x ↦ [[2,1],[1,1]]x mod 1 on T², exact eigenline splitting",
            parameters: Vec::new(),
        },
        ModelInfo {
            name: "perturbed_cat",
            summary: "x ↦ Ax + eps·(sin 2πx₁, 0) mod 1, splitting converged at depth 40",
            parameters: vec![ParameterInfo {
                name: "eps",
                default: default_eps(),
                range: "[0, 0.05]",
            }],
        },
        ModelInfo {
            name: "solenoid",
            summary: "(φ, w) ↦ (2φ, c·w + d·e^{iφ}) on S¹×D², E = fiber plane, F converged at depth 30",
            parameters: vec![
                ParameterInfo {
                    name: "c",
                    default: default_c(),
                    range: "(0, 0.5)",
                },
                ParameterInfo {
                    name: "d",
                    default: default_d(),
                    range: "real",
                },
            ],
        },
        ModelInfo {
            name: "dfa",
            summary: "cat map with unstable multiplier lowered to 1 + delta within radius rho of the fixed point",
            parameters: vec![
                ParameterInfo {
                    name: "delta",
                    default: default_delta(),
                    range: "(0, λ_u − 1)",
                },
                ParameterInfo {
                    name: "rho",
                    default: default_rho(),
                    range: "(0, 0.5)",
                },
            ],
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth {
    pub quantity: &'static str,
    pub value: f64,
    pub source: &'static str,
}

/// Known constants of a model with where they come from.
pub fn ground_truth(spec: &ModelSpec) -> Vec<GroundTruth> {
    match *spec {
        ModelSpec::Cat {} => vec![
            GroundTruth {
                quantity: "norm_df_inv_on_f",
                value: Cat::lambda_s(),
                source: "eigenvalue (3 − √5)/2 of [[2,1],[1,1]]",
            },
            GroundTruth {
                quantity: "norm_df_on_e",
                value: Cat::lambda_s(),
                source: "eigenvalue (3 − √5)/2 of [[2,1],[1,1]]",
            },
            GroundTruth {
                quantity: "b",
                value: Cat::lambda_u(),
                source: "eigenvalue (3 + √5)/2 of [[2,1],[1,1]]",
            },
            GroundTruth {
                quantity: "domination_ratio",
                value: Cat::lambda_s() / Cat::lambda_u(),
                source: "λ_s/λ_u = λ_u⁻²",
            },
        ],
        ModelSpec::PerturbedCat { eps } => vec![GroundTruth {
            quantity: "jacobian_det_min",
            value: 1.0 - std::f64::consts::TAU * eps,
            source: "det Df = 1 + 2π·eps·cos 2πx₁",
        }],
        ModelSpec::Solenoid { c, .. } => vec![
            GroundTruth {
                quantity: "norm_df_on_e",
                value: c,
                source: "Df acts on the fiber plane as c·Id",
            },
            GroundTruth {
                quantity: "base_expansion",
                value: 2.0,
                source: "φ ↦ 2φ",
            },
        ],
        ModelSpec::Dfa { delta, .. } => vec![
            GroundTruth {
                quantity: "b",
                value: 1.0 + delta,
                source: "unstable multiplier at the fixed point",
            },
            GroundTruth {
                quantity: "far_field_expansion",
                value: Cat::lambda_u(),
                source: "cat map outside the bump",
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip_through_json() {
        let spec: ModelSpec = serde_json::from_str(r#"{"name": "solenoid", "c": 0.3}"#).unwrap();
        assert_eq!(spec, ModelSpec::Solenoid { c: 0.3, d: 0.5 });
        assert!(serde_json::from_str::<ModelSpec>(r#"{"name": "cat", "eps": 1}"#).is_err());
        assert_eq!(build(&spec).unwrap().name(), "solenoid");
    }

    #[test]
    fn four_models_are_listed() {
        let names: Vec<_> = list_models().iter().map(|m| m.name).collect();
        assert_eq!(names, ["cat", "perturbed_cat", "solenoid", "dfa"]);
    }
}
