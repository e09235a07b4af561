//! Input-configuration filters applied to real observations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::{evaluate_mapped, PredictionRecord};
use crate::error::{Error, Result};
use crate::imaging;
use crate::model::{ModelParams, VariantTag};
use crate::sim::{Observation, PairedDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub id: String,
    #[serde(default)]
    pub brightness: f64,
    #[serde(default)]
    pub contrast: f64,
    #[serde(default)]
    pub temperature: f64,
    /// `(lo, hi)` as fractions of the sensor's max depth.
    #[serde(default = "full_range")]
    pub depth_range: (f64, f64),
}

fn full_range() -> (f64, f64) {
    (0.0, 1.0)
}

impl FilterConfig {
    pub fn identity(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            brightness: 0.0,
            contrast: 0.0,
            temperature: 0.0,
            depth_range: full_range(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.brightness == 0.0
            && self.contrast == 0.0
            && self.temperature == 0.0
            && self.depth_range == full_range()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (-1.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside [-1, 1]"
                )))
            }
        };
        unit("brightness", self.brightness)?;
        unit("contrast", self.contrast)?;
        unit("temperature", self.temperature)?;
        let (lo, hi) = self.depth_range;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "depth_range ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"
            )));
        }
        if self.id.is_empty() || self.id.contains(['/', '\\', ':']) {
            return Err(Error::InvalidArgument(format!(
                "bad filter id {:?}",
                self.id
            )));
        }
        Ok(())
    }

    pub fn variant(&self) -> VariantTag {
        VariantTag::Filtered(self.id.clone())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f: FilterConfig = serde_json::from_slice(&std::fs::read(path)?)?;
        f.validate()?;
        Ok(f)
    }
}

/// Temperature, brightness, contrast, then depth range.
pub fn apply_filters(obs: &Observation, f: &FilterConfig) -> Observation {
    let mut out = obs.clone();
    imaging::temperature(&mut out.rgb, f.temperature);
    imaging::brightness(&mut out.rgb, f.brightness);
    imaging::contrast(&mut out.rgb, f.contrast);
    imaging::depth_range(
        &mut out.depth,
        obs.camera.max_depth,
        f.depth_range.0,
        f.depth_range.1,
    );
    out
}

/// Re-evaluates `model` with `f` applied to every real observation.
pub fn evaluate_with_filter(
    model: &ModelParams,
    ds: &PairedDataset,
    f: &FilterConfig,
) -> Result<(VariantTag, Vec<PredictionRecord>)> {
    f.validate()?;
    let records = evaluate_mapped(model, ds, |o| apply_filters(o, f))?;
    Ok((f.variant(), records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{presets, render, CameraSpec, Pose};

    fn obs() -> Observation {
        render(
            &presets::default_scene(),
            &CameraSpec::default(),
            &Pose::new(2.0, 12.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_exact_noop() {
        let o = obs();
        assert_eq!(apply_filters(&o, &FilterConfig::identity("id")), o);
    }

    #[test]
    fn depth_range_clamps_at_max() {
        let mut o = obs();
        o.depth[0] = o.camera.max_depth as f32;
        let f = FilterConfig {
            depth_range: (0.0, 0.5),
            ..FilterConfig::identity("half")
        };
        let out = apply_filters(&o, &f);
        assert_eq!(out.depth[0], o.camera.max_depth as f32);
    }

    #[test]
    fn order_is_temperature_first() {
        let mut o = obs();
        o.rgb[..3].copy_from_slice(&[200.0, 100.0, 50.0]);
        let f = FilterConfig {
            temperature: 0.5,
            brightness: 0.2,
            ..FilterConfig::identity("t")
        };
        let out = apply_filters(&o, &f);
        // R saturates during temperature, before brightness gets a chance.
        assert_eq!(out.rgb[0], 255.0);
        assert!((out.rgb[2] - 30.0).abs() < 1e-4);
    }

    #[test]
    fn validation() {
        assert!(FilterConfig {
            brightness: 1.5,
            ..FilterConfig::identity("a")
        }
        .validate()
        .is_err());
        assert!(FilterConfig {
            depth_range: (0.5, 0.5),
            ..FilterConfig::identity("a")
        }
        .validate()
        .is_err());
        assert!(FilterConfig::identity("../x").validate().is_err());
        assert!(FilterConfig::identity("ok").validate().is_ok());
    }

    #[test]
    fn json_defaults() {
        let f: FilterConfig = serde_json::from_str(r#"{"id":"b15","brightness":0.15}"#).unwrap();
        assert_eq!(f.depth_range, (0.0, 1.0));
        assert_eq!(f.variant().to_string(), "filtered:b15");
    }
}
