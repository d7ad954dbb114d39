//! Run configuration: TOML blocks for the model, the design parameters, the
//! evaluation settings and the output destination, with field-precise
//! validation and a stable content hash embedded in report headers.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{FamilyRegistry, FamilySpec, ObservationModel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub design: DesignConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// `iid`, `periodic`, `finitely_nonstationary` or `explicit`.
    pub structure: String,
    pub stages: Vec<FamilySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignConfig {
    pub b: f64,
    pub c: f64,
    /// Truncation horizon; untruncated when absent.
    pub horizon: Option<usize>,
    pub z_min: Option<f64>,
    pub z_max: Option<f64>,
    pub step: Option<f64>,
    pub sup_norm_tol: Option<f64>,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_max_sweeps() -> usize {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationConfig {
    #[serde(default)]
    pub thetas: Vec<f64>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub force_mc: bool,
    /// Trajectory length cap for untruncated runs.
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_reps() -> usize {
    10_000
}

fn default_budget() -> usize {
    1_000_000
}

fn default_cap() -> usize {
    crate::engine::DEFAULT_RUNAWAY_CAP
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            thetas: Vec::new(),
            reps: default_reps(),
            seed: 0,
            budget: default_budget(),
            force_mc: false,
            cap: default_cap(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            field: "<toml>".into(),
            reason: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let field_err = |field: &str, reason: String| Error::Config {
            field: field.into(),
            reason,
        };
        if self.design.c <= 0.0 {
            return Err(field_err("design.c", format!("must be positive, got {}", self.design.c)));
        }
        if self.evaluation.reps < 1 {
            return Err(field_err("evaluation.reps", "must be at least 1".into()));
        }
        if self.model.stages.is_empty() {
            return Err(field_err("model.stages", "at least one stage is required".into()));
        }
        match self.model.structure.as_str() {
            "iid" => {
                if self.model.stages.len() != 1 {
                    return Err(field_err(
                        "model.stages",
                        "iid structure takes exactly one stage".into(),
                    ));
                }
            }
            "periodic" | "finitely_nonstationary" | "explicit" => {}
            other => {
                return Err(field_err(
                    "model.structure",
                    format!("unknown structure {other:?}"),
                ));
            }
        }
        if self.model.structure == "explicit" && self.design.horizon.is_none() {
            return Err(field_err(
                "design.horizon",
                "explicit stage lists support truncated designs only".into(),
            ));
        }
        if let Some(h) = self.design.horizon {
            if h < 1 {
                return Err(field_err("design.horizon", "must be at least 1".into()));
            }
        }
        if let (Some(lo), Some(hi), Some(step)) = (self.design.z_min, self.design.z_max, self.design.step) {
            GridSpec::new(lo, hi, step).map_err(|e| field_err("design.z_min..step", e.to_string()))?;
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<ObservationModel> {
        let registry = FamilyRegistry::builtin();
        let stages = self
            .model
            .stages
            .iter()
            .map(|spec| registry.build(spec))
            .collect::<Result<Vec<_>>>()?;
        let model = match self.model.structure.as_str() {
            "iid" => ObservationModel::iid(stages.into_iter().next().expect("validated")),
            "periodic" => ObservationModel::periodic(stages)?,
            "finitely_nonstationary" => ObservationModel::finitely_nonstationary(stages)?,
            "explicit" => ObservationModel::explicit(stages)?,
            _ => unreachable!("validated structure"),
        };
        for &theta in &self.evaluation.thetas {
            let (lo, hi) = model.theta_interval();
            if theta <= lo || theta >= hi {
                return Err(Error::Config {
                    field: "evaluation.thetas".into(),
                    reason: format!("theta {theta} outside the valid interval ({lo}, {hi})"),
                });
            }
        }
        Ok(model)
    }

    pub fn grid(&self) -> Result<Option<GridSpec>> {
        match (self.design.z_min, self.design.z_max, self.design.step) {
            (Some(lo), Some(hi), Some(step)) => Ok(Some(GridSpec::new(lo, hi, step)?)),
            (None, None, None) => Ok(None),
            _ => Err(Error::Config {
                field: "design.z_min".into(),
                reason: "z_min, z_max and step must be given together".into(),
            }),
        }
    }

    /// Stable hex digest of the canonicalized config, for report headers.
    pub fn hash(&self) -> String {
        let canon = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        hex::encode(&digest[..8])
    }
}
