//! Experiment configuration: a versioned JSON document, validated before any
//! computation runs.

use std::collections::BTreeMap;

use minrec_core::covering::{default_grid, BoundOptions, Shrink, DEFAULT_K_MAX};
use minrec_core::flow::LinearFlow;
use minrec_core::systems::{
    AlphaSpec, AnnulusSystem, CirclePoint, Entourage, GammaSchedule, Point, RotationSystem, SequenceSystem,
    SubstitutionSystem, SystemDescriptor, TorusZdAction,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::exit::Failure;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub system: SystemSpec,
    pub epsilon: Entourage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Window lengths W. Integral for cascades, real for flows.
    #[serde(default)]
    pub windows: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub shrink: Shrink,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default = "default_spot_checks")]
    pub spot_checks: usize,
    #[serde(default)]
    pub seed: u64,
    /// Thread count; never changes the output, so it is left out of the digest.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing)]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amenable: Option<AmenableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folner: Option<FolnerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowCheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
}

fn default_k_max() -> u64 {
    DEFAULT_K_MAX
}

fn default_spot_checks() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SystemSpec {
    Rotation {
        #[serde(default)]
        name: Option<String>,
        alpha: AlphaSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error_budget: Option<f64>,
    },
    Substitution {
        name: String,
        rules: BTreeMap<char, String>,
    },
    /// The orbit closure of prefix · cycle^∞.
    Sequence {
        name: String,
        #[serde(default)]
        prefix: String,
        cycle: String,
    },
    TorusZd {
        name: String,
        /// generators[i][j]: coordinate j of the i-th generator.
        generators: Vec<Vec<AlphaSpec>>,
    },
    /// Omitting `velocity` gives the unit-speed flow of golden slope.
    LinearFlow {
        #[serde(default)]
        name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        velocity: Option<[f64; 2]>,
    },
    Annulus {
        name: String,
        alpha: f64,
        #[serde(default)]
        gamma: GammaSchedule,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemDescriptor, Failure> {
        let sys = match self {
            SystemSpec::Rotation { name, alpha, error_budget } => {
                let mut rot = RotationSystem::new(name.clone().unwrap_or_else(|| "rotation".into()), alpha.clone())
                    .map_err(Failure::config)?;
                if let Some(b) = error_budget {
                    rot = rot.with_error_budget(*b);
                }
                SystemDescriptor::Rotation(rot)
            }
            SystemSpec::Substitution { name, rules } => {
                SystemDescriptor::Substitution(SubstitutionSystem::new(name.clone(), rules).map_err(Failure::core)?)
            }
            SystemSpec::Sequence { name, prefix, cycle } => {
                SystemDescriptor::Sequence(SequenceSystem::new(name.clone(), prefix, cycle).map_err(Failure::config)?)
            }
            SystemSpec::TorusZd { name, generators } => {
                SystemDescriptor::TorusZd(TorusZdAction::new(name.clone(), generators).map_err(Failure::config)?)
            }
            SystemSpec::LinearFlow { name, velocity } => {
                let mut flow = match velocity {
                    Some(v) => LinearFlow::new("linear-flow", *v).map_err(Failure::config)?,
                    None => LinearFlow::golden_unit(),
                };
                if let Some(n) = name {
                    flow.name = n.clone();
                }
                SystemDescriptor::LinearFlow(flow)
            }
            SystemSpec::Annulus { name, alpha, gamma } => SystemDescriptor::Annulus(
                AnnulusSystem::new(name.clone(), *alpha, gamma.clone()).map_err(Failure::config)?,
            ),
        };
        Ok(sys)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum GridSpec {
    /// The library's default grid with about `points` base points (one per
    /// cylinder for substitutions).
    Uniform { points: usize },
    /// Circle coordinates in [0, 1).
    Circle { values: Vec<f64> },
    /// Torus coordinates in [0, 1).
    Torus { values: Vec<Vec<f64>> },
    /// Offsets into the generating sequence of a symbolic system.
    Offsets { values: Vec<u64> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
}

/// Box ladder for Z^d actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmenableSpec {
    pub box_sides: Vec<Vec<u64>>,
    pub horizon: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolnerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<DefectSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma42: Option<Lemma42Spec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma43: Option<Lemma43Spec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dichotomy: Option<DichotomySpec>,
}

/// Defects |(t + F) △ F|/|F| for cubes of the given sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSpec {
    pub dim: usize,
    pub sides: Vec<u64>,
    pub t: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma42Spec {
    pub h: Vec<Vec<i64>>,
    pub sides: Vec<u64>,
}

/// A coset union B = {t : t mod moduli ∈ residues}; the witness K is the
/// smallest fundamental box unless given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma43Spec {
    pub moduli: Vec<u64>,
    pub residues: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_set: Option<Vec<Vec<i64>>>,
    pub sides: Vec<u64>,
}

/// Almost-periodicity test on N(x, ε[x]) for the first grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomySpec {
    pub region: u64,
    pub ladder: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowCheckSpec {
    /// Quadrature is compared on [0, quadrature_horizon).
    pub quadrature_horizon: f64,
    #[serde(default = "default_quadrature_tolerance")]
    pub quadrature_tolerance: f64,
}

fn default_quadrature_tolerance() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub n: Vec<u64>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_probe_tolerance")]
    pub tolerance: f64,
    /// Steps iterated on each probed level to confirm the radius never moves.
    #[serde(default = "default_probe_steps")]
    pub radius_steps: u64,
}

fn default_probe_tolerance() -> f64 {
    1e-9
}

fn default_probe_steps() -> u64 {
    10_000
}

impl ExperimentConfig {
    /// Parses and validates; errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Failure::config_at(e.to_string(), e.line(), e.column())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.version != CONFIG_VERSION {
            return Err(Failure::config_msg(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.epsilon.validate().map_err(Failure::config)?;
        if self.windows.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Failure::config_msg("window lengths must be positive".into()));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Failure::config_msg("horizon must be positive".into()));
            }
        }
        if self.workers == Some(0) {
            return Err(Failure::config_msg("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// sha256 of the canonical serialization (workers and output excluded).
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    pub fn bound_options(&self) -> BoundOptions {
        BoundOptions {
            shrink: self.shrink,
            k_max: self.k_max,
            spot_checks: self.spot_checks,
            seed: self.seed,
        }
    }

    pub fn horizon(&self) -> Result<f64, Failure> {
        self.horizon.ok_or_else(|| Failure::config_msg("this command needs a horizon".into()))
    }

    pub fn windows(&self) -> Result<&[f64], Failure> {
        if self.windows.is_empty() {
            return Err(Failure::config_msg("this command needs at least one window length".into()));
        }
        Ok(&self.windows)
    }

    pub fn grid(&self, system: &SystemDescriptor) -> Result<(Vec<Point>, String), Failure> {
        let spec = self.grid.as_ref().ok_or_else(|| Failure::config_msg("this command needs a grid".into()))?;
        match spec {
            GridSpec::Uniform { points } => default_grid(system, &self.epsilon, *points).map_err(Failure::core),
            GridSpec::Circle { values } => Ok((
                values.iter().map(|&v| Point::Circle(CirclePoint::from_f64(v))).collect(),
                format!("{} explicit circle points", values.len()),
            )),
            GridSpec::Torus { values } => Ok((
                values
                    .iter()
                    .map(|v| Point::Torus(v.iter().map(|&c| CirclePoint::from_f64(c)).collect()))
                    .collect(),
                format!("{} explicit torus points", values.len()),
            )),
            GridSpec::Offsets { values } => {
                let pts = values
                    .iter()
                    .map(|&o| match system {
                        SystemDescriptor::Substitution(s) => Ok(Point::Symbolic(s.point(o))),
                        SystemDescriptor::Sequence(s) => Ok(Point::Symbolic(s.point(o))),
                        other => Err(Failure::config_msg(format!(
                            "offset grids need a symbolic system, not '{}'",
                            other.name()
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((pts, format!("{} explicit sequence offsets", values.len())))
            }
        }
    }
}

/// An integral window or horizon for cascades.
pub fn integral(v: f64, what: &str) -> Result<u64, Failure> {
    if v.fract() != 0.0 || v < 1.0 || v > 2f64.powi(53) {
        return Err(Failure::config_msg(format!("{what} must be a positive integer for cascades, got {v}")));
    }
    Ok(v as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = r#"{
        "version": 1,
        "system": {"kind": "rotation", "name": "golden", "alpha": {"kind": "golden"}},
        "epsilon": {"kind": "metric_ball", "radius": 0.15},
        "grid": {"kind": "uniform", "points": 10},
        "windows": [100],
        "horizon": 1000
    }"#;

    #[test]
    fn parses_and_digests() {
        let c = ExperimentConfig::from_json(GOLDEN).unwrap();
        assert_eq!(c.k_max, DEFAULT_K_MAX);
        assert_eq!(c.shrink, Shrink::Third);
        let mut d = c.clone();
        d.workers = Some(3);
        assert_eq!(c.digest(), d.digest());
        d.seed = 1;
        assert_ne!(c.digest(), d.digest());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = GOLDEN.replace("\"horizon\"", "\"horizn\"");
        let err = ExperimentConfig::from_json(&bad).unwrap_err();
        assert_eq!(err.code, crate::exit::ExitCode::ConfigError);
        assert!(err.line.is_some());
        let bad = GOLDEN.replace("\"name\": \"golden\",", "\"name\": \"golden\", \"extra\": 1,");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = ExperimentConfig::from_json("{\n  \"version\": 1,\n  oops\n}").unwrap_err();
        assert_eq!((err.line, err.column), (Some(3), Some(3)));
    }

    #[test]
    fn wrong_version_is_refused() {
        let bad = GOLDEN.replace("\"version\": 1", "\"version\": 2");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn integral_windows() {
        assert_eq!(integral(1e4, "W").unwrap(), 10_000);
        assert!(integral(2.5, "W").is_err());
    }
}
