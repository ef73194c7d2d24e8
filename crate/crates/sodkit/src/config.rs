//! Run configuration: one flat TOML table covering the model and the
//! metrics. Absent keys take their defaults; unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sodkit_core::metrics::MetricConfig;
use sodkit_core::model::{Detach, ModelConfig};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetachSide {
    Finer,
    Coarser,
}

impl From<DetachSide> for Detach {
    fn from(d: DetachSide) -> Self {
        match d {
            DetachSide::Finer => Detach::Finer,
            DetachSide::Coarser => Detach::Coarser,
        }
    }
}

impl From<Detach> for DetachSide {
    fn from(d: Detach) -> Self {
        match d {
            Detach::Finer => DetachSide::Finer,
            Detach::Coarser => DetachSide::Coarser,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input_size: [usize; 2],
    pub backbone_channels: [usize; 4],
    pub d: usize,
    pub alpha_graph: f64,
    pub k: usize,
    pub graph_pool: [usize; 4],
    pub symmetrize: bool,
    pub lambda_c: f64,
    pub detach: DetachSide,
    pub seed: u64,
    pub beta2: f64,
    pub alpha_s: f64,
    pub iou_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let e = MetricConfig::default();
        Self {
            input_size: m.input_size,
            backbone_channels: m.backbone_channels,
            d: m.d,
            alpha_graph: m.alpha_graph,
            k: m.k,
            graph_pool: m.graph_pool,
            symmetrize: m.symmetrize,
            lambda_c: m.lambda_c,
            detach: m.detach.into(),
            seed: m.seed,
            beta2: e.beta2,
            alpha_s: e.alpha_s,
            iou_threshold: e.iou_threshold,
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }

    /// `path` if given, otherwise the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat table serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config()
            .validate()
            .and_then(|_| self.metric_config().validate())
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            input_size: self.input_size,
            backbone_channels: self.backbone_channels,
            d: self.d,
            alpha_graph: self.alpha_graph,
            k: self.k,
            graph_pool: self.graph_pool,
            symmetrize: self.symmetrize,
            lambda_c: self.lambda_c,
            detach: self.detach.into(),
            seed: self.seed,
        }
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            beta2: self.beta2,
            alpha_s: self.alpha_s,
            iou_threshold: self.iou_threshold,
        }
    }
}
