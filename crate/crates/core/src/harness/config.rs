use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::Point;
use crate::error::{Error, Result};
use crate::models::{build, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    PlissDemo,
    HyperbolicTimes,
    ConeCheck,
    DiskIterate,
    Contraction,
    Distortion,
    Curvature,
    SrbConverge,
    HyperbolicMass,
    PhysicalBasin,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::PlissDemo,
        Experiment::HyperbolicTimes,
        Experiment::ConeCheck,
        Experiment::DiskIterate,
        Experiment::Contraction,
        Experiment::Distortion,
        Experiment::Curvature,
        Experiment::SrbConverge,
        Experiment::HyperbolicMass,
        Experiment::PhysicalBasin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PlissDemo => "pliss_demo",
            Experiment::HyperbolicTimes => "hyperbolic_times",
            Experiment::ConeCheck => "cone_check",
            Experiment::DiskIterate => "disk_iterate",
            Experiment::Contraction => "contraction",
            Experiment::Distortion => "distortion",
            Experiment::Curvature => "curvature",
            Experiment::SrbConverge => "srb_converge",
            Experiment::HyperbolicMass => "hyperbolic_mass",
            Experiment::PhysicalBasin => "physical_basin",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::UnknownName {
                kind: "experiment",
                name: name.to_string(),
                valid: Self::ALL.map(|e| e.name()).join(", "),
            })
    }

    pub fn default_horizon(self) -> usize {
        match self {
            Experiment::PlissDemo => 100,
            Experiment::HyperbolicTimes => 1000,
            Experiment::ConeCheck => 20,
            Experiment::DiskIterate => 4,
            Experiment::Contraction => 50,
            Experiment::Distortion => 30,
            Experiment::Curvature => 10,
            Experiment::SrbConverge => 100_000,
            Experiment::HyperbolicMass => 200,
            Experiment::PhysicalBasin => 100_000,
        }
    }

    pub fn default_orbits(self) -> usize {
        match self {
            Experiment::PlissDemo | Experiment::DiskIterate | Experiment::SrbConverge => 1,
            Experiment::HyperbolicTimes => 256,
            Experiment::ConeCheck => 16,
            Experiment::Contraction | Experiment::Distortion => 4,
            Experiment::Curvature => 20,
            Experiment::HyperbolicMass => 1,
            Experiment::PhysicalBasin => 1,
        }
    }

    pub fn default_resolution(self) -> usize {
        match self {
            Experiment::SrbConverge => 101,
            Experiment::PhysicalBasin => 21,
            _ => 401,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_radius() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    /// Base point; a burnt-in quasi-random point when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

impl Default for DiskConfig {
    fn default() -> Self {
        Self {
            center: None,
            radius: default_radius(),
            resolution: None,
        }
    }
}

/// Optional overrides of measured or default constants.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Lebesgue for the cat map, a second pushed-forward disk otherwise.
    #[default]
    Auto,
    Lebesgue,
    Disk,
}

fn default_tests() -> usize {
    8
}

fn default_samples() -> usize {
    200
}

fn default_tol() -> f64 {
    0.02
}

fn default_distance_tol() -> f64 {
    0.03
}

fn default_min_fraction() -> f64 {
    0.99
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default = "default_tests")]
    pub tests: usize,
    /// Basin sample points.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Birkhoff tolerance per test for basin membership.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Largest accepted final weak-* distance in `srb_converge`.
    #[serde(default = "default_distance_tol")]
    pub distance_tol: f64,
    /// Smallest accepted basin fraction in `physical_basin`.
    #[serde(default = "default_min_fraction")]
    pub min_fraction: f64,
    /// Convergence checkpoints; doubling from 1000 up to the horizon when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default)]
    pub reference: Reference,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            tests: default_tests(),
            samples: default_samples(),
            tol: default_tol(),
            distance_tol: default_distance_tol(),
            min_fraction: default_min_fraction(),
            checkpoints: None,
            reference: Reference::Auto,
        }
    }
}

fn default_pairs() -> usize {
    500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Base orbits (or disks); experiment-specific default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbits: Option<usize>,
    /// `(y, n)` pairs for the distortion experiment.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            orbits: None,
            pairs: default_pairs(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One run: a model, an experiment and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub disk: DiskConfig,
    #[serde(default)]
    pub constants: ConstantOverrides,
    #[serde(default)]
    pub measures: MeasureConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub seed: u64,
    /// Not echoed: summaries must not depend on where they are written.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        path: path.to_string(),
        message: message.into(),
    }
}

fn check_open_unit(path: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x < 1.0) => Err(invalid(path, format!("must lie in (0, 1), got {x}"))),
        _ => Ok(()),
    }
}

fn check_positive(path: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(invalid(path, format!("must be positive and finite, got {x}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(model: ModelSpec, experiment: Experiment) -> Self {
        Self {
            model,
            experiment,
            horizon: None,
            disk: DiskConfig::default(),
            constants: ConstantOverrides::default(),
            measures: MeasureConfig::default(),
            sampling: SamplingConfig::default(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }

    /// Parses and validates a JSON document. Errors carry the path of the
    /// offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(self.experiment.default_horizon())
    }

    pub fn orbits(&self) -> usize {
        self.sampling.orbits.unwrap_or(self.experiment.default_orbits())
    }

    pub fn resolution(&self) -> usize {
        self.disk.resolution.unwrap_or(self.experiment.default_resolution())
    }

    /// Convergence checkpoints: explicit, or `1000·2^k` below the horizon
    /// followed by the horizon itself.
    pub fn checkpoints(&self) -> Vec<usize> {
        if let Some(c) = &self.measures.checkpoints {
            return c.clone();
        }
        let n = self.horizon();
        let mut out = Vec::new();
        let mut c = 1000;
        while c < n {
            out.push(c);
            c *= 2;
        }
        out.push(n);
        out
    }

    /// Checks every field against the preconditions of the module that
    /// consumes it.
    pub fn validate(&self) -> Result<()> {
        let sys = build(&self.model).map_err(|e| invalid("model", e.to_string()))?;
        if self.horizon == Some(0) {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if let Some(c) = &self.disk.center {
            if c.len() != sys.dim() {
                return Err(invalid(
                    "disk.center",
                    format!(
                        "model {} has dimension {}, got {} coordinates",
                        self.model.name(),
                        sys.dim(),
                        c.len()
                    ),
                ));
            }
            if !sys.contains(&Point::new(c.clone())) {
                return Err(invalid("disk.center", format!("{c:?} lies outside the model region")));
            }
        }
        check_positive("disk.radius", Some(self.disk.radius))?;
        if let Some(res) = self.disk.resolution {
            if res < 3 || res % 2 == 0 {
                return Err(invalid(
                    "disk.resolution",
                    format!("must be odd and at least 3, got {res}"),
                ));
            }
        }
        let k = &self.constants;
        check_open_unit("constants.sigma", k.sigma)?;
        check_open_unit("constants.lambda1", k.lambda1)?;
        check_open_unit("constants.lambda2", k.lambda2)?;
        check_open_unit("constants.lambda4", k.lambda4)?;
        check_open_unit("constants.gamma", k.gamma)?;
        check_positive("constants.a", k.a)?;
        check_positive("constants.r", k.r)?;
        check_positive("constants.r1", k.r1)?;
        check_positive("constants.alpha", k.alpha)?;
        if let Some(xi) = k.xi {
            if !(xi > 0.0 && xi <= 1.0) {
                return Err(invalid("constants.xi", format!("must lie in (0, 1], got {xi}")));
            }
        }
        if let (Some(l1), Some(s)) = (k.lambda1, k.sigma) {
            if matches!(
                self.experiment,
                Experiment::HyperbolicTimes | Experiment::HyperbolicMass
            ) && l1 >= s
            {
                return Err(invalid(
                    "constants.sigma",
                    format!("must exceed lambda1 = {l1}, got {s}"),
                ));
            }
        }
        let m = &self.measures;
        if m.tests == 0 {
            return Err(invalid("measures.tests", "must be at least 1"));
        }
        if self.experiment == Experiment::PhysicalBasin && m.samples < 100 {
            return Err(invalid(
                "measures.samples",
                format!("must be at least 100, got {}", m.samples),
            ));
        }
        check_positive("measures.tol", Some(m.tol))?;
        check_positive("measures.distance_tol", Some(m.distance_tol))?;
        if !(m.min_fraction >= 0.0 && m.min_fraction <= 1.0) {
            return Err(invalid(
                "measures.min_fraction",
                format!("must lie in [0, 1], got {}", m.min_fraction),
            ));
        }
        if let Some(c) = &m.checkpoints {
            if c.is_empty() || c[0] == 0 || c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(
                    "measures.checkpoints",
                    "must be positive and strictly increasing",
                ));
            }
            if self.horizon.is_some_and(|h| *c.last().expect("non-empty") != h) {
                return Err(invalid("measures.checkpoints", "must end at the horizon"));
            }
        }
        if m.reference == Reference::Lebesgue && !matches!(self.model, ModelSpec::Cat {}) {
            return Err(invalid(
                "measures.reference",
                format!("Lebesgue is not invariant for {}", self.model.name()),
            ));
        }
        if self.sampling.orbits == Some(0) {
            return Err(invalid("sampling.orbits", "must be at least 1"));
        }
        if self.sampling.pairs == 0 {
            return Err(invalid("sampling.pairs", "must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(text)
    }

    fn path_of(err: Error) -> String {
        match err {
            Error::ConfigInvalid { path, .. } => path,
            other => panic!("expected ConfigInvalid, got {other}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(r#"{"model": {"name": "cat"}, "experiment": "pliss_demo"}"#).unwrap();
        assert_eq!(c.horizon(), 100);
        assert_eq!(c.resolution(), 401);
        assert_eq!(c.disk.radius, 0.1);
        assert_eq!(c.measures.tests, 8);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn sigma_above_one_is_rejected() {
        let err = parse(r#"{"model": {"name": "cat"}, "experiment": "pliss_demo", "constants": {"sigma": 1.5}}"#)
            .unwrap_err();
        assert_eq!(path_of(err), "constants.sigma");
    }

    #[test]
    fn unknown_fields_report_their_path() {
        let err =
            parse(r#"{"model": {"name": "cat"}, "experiment": "pliss_demo", "disk": {"radius": 0.1, "colour": 1}}"#)
                .unwrap_err();
        assert_eq!(path_of(err), "disk.colour");
        let err = parse(r#"{"model": {"name": "cat"}, "experiment": "pliss_demo", "extra": true}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref message, .. } if message.contains("extra")));
        let err = parse(r#"{"model": {"name": "cat"}, "experiment": "bogus"}"#).unwrap_err();
        assert_eq!(path_of(err), "experiment");
    }

    #[test]
    fn semantic_checks() {
        let bad = [
            (r#""horizon": 0"#, "horizon"),
            (r#""disk": {"resolution": 400}"#, "disk.resolution"),
            (r#""disk": {"center": [0.1, 0.2, 0.3]}"#, "disk.center"),
            (r#""disk": {"radius": -1}"#, "disk.radius"),
            (r#""constants": {"xi": 0}"#, "constants.xi"),
            (r#""constants": {"r": 0}"#, "constants.r"),
            (r#""measures": {"checkpoints": [10, 5]}"#, "measures.checkpoints"),
            (r#""measures": {"tol": 0}"#, "measures.tol"),
        ];
        for (field, path) in bad {
            let text = format!(r#"{{"model": {{"name": "cat"}}, "experiment": "pliss_demo", {field}}}"#);
            assert_eq!(path_of(parse(&text).unwrap_err()), path, "{field}");
        }
        let err = parse(r#"{"model": {"name": "perturbed_cat", "eps": 0.5}, "experiment": "pliss_demo"}"#).unwrap_err();
        assert_eq!(path_of(err), "model");
        let err = parse(
            r#"{"model": {"name": "solenoid"}, "experiment": "srb_converge", "measures": {"reference": "lebesgue"}}"#,
        )
        .unwrap_err();
        assert_eq!(path_of(err), "measures.reference");
    }

    #[test]
    fn checkpoints_double_up_to_the_horizon() {
        let mut c = ExperimentConfig::new(ModelSpec::Cat {}, Experiment::SrbConverge);
        assert_eq!(c.checkpoints(), [1000, 2000, 4000, 8000, 16000, 32000, 64000, 100_000]);
        c.horizon = Some(500);
        assert_eq!(c.checkpoints(), [500]);
    }

    #[test]
    fn echo_round_trips_without_the_output_dir() {
        let mut c = ExperimentConfig::new(ModelSpec::Dfa { delta: 0.05, rho: 0.2 }, Experiment::HyperbolicMass);
        c.output_dir = PathBuf::from("/tmp/somewhere");
        let text = serde_json::to_string(&c).unwrap();
        assert!(!text.contains("somewhere"));
        let back = parse(&text).unwrap();
        assert_eq!(back.model, c.model);
        assert_eq!(back.output_dir, PathBuf::from("out"));
        assert_eq!(Experiment::from_name("distortion").unwrap(), Experiment::Distortion);
        assert!(matches!(Experiment::from_name("nope"), Err(Error::UnknownName { .. })));
    }
}
