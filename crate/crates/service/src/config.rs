//! Session configuration, read from one TOML or JSON file.

use std::path::{Path, PathBuf};

use gapscope_core::model::TrainConfig;
use gapscope_core::sim::{CameraSpec, Perturbation};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

pub const SESSION_DIR_ENV: &str = "GAPSCOPE_SESSION_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub session: SessionSection,
    pub scene: SceneSection,
    pub camera: CameraSpec,
    pub dataset: DatasetSection,
    pub training: TrainConfig,
    pub fine_tune: FineTuneSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSection {
    pub id: String,
    /// Session root; relative paths resolve against the config file.
    pub dir: Option<PathBuf>,
}

impl Default for SessionSection {
    fn default() -> Self {
        Self {
            id: "default".into(),
            dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    /// Sim scene JSON; the built-in office floor when absent.
    pub sim: Option<PathBuf>,
    /// Applied in order to the sim scene to obtain the real one.
    pub perturbations: Vec<Perturbation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub n: usize,
    pub seed: u64,
    pub min_dist: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            n: 2000,
            seed: 7,
            min_dist: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineTuneSection {
    /// Share of the dataset whose real frames are used for fine-tuning.
    pub fraction: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for FineTuneSection {
    fn default() -> Self {
        Self {
            fraction: 0.1,
            epochs: 20,
            learning_rate: 0.002,
        }
    }
}

impl Config {
    /// Parses by extension: `.json` as JSON, anything else as TOML. Relative
    /// paths inside the file are made absolute against its directory.
    pub fn load(path: impl AsRef<Path>) -> ServiceResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.session.dir, &mut cfg.scene.sim]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> ServiceResult<Self> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> ServiceResult<Self> {
        serde_json::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn validate(&self) -> ServiceResult<()> {
        self.training.validate()?;
        for p in &self.scene.perturbations {
            p.validate()?;
        }
        if !(self.fine_tune.fraction > 0.0 && self.fine_tune.fraction <= 1.0) {
            return Err(ServiceError::Config(format!(
                "fine_tune.fraction {} outside (0, 1]",
                self.fine_tune.fraction
            )));
        }
        if self.camera.width == 0 || self.camera.height == 0 {
            return Err(ServiceError::Config(
                "camera resolution must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Flag, then `GAPSCOPE_SESSION_DIR`, then the config file, then
    /// `./gapscope-session`.
    pub fn session_root(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(SESSION_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.session
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("gapscope-session"))
    }
}
