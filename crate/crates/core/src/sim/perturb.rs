use serde::{Deserialize, Serialize};

use super::scene::{DepthNoise, Object, Scene};
use crate::error::{Error, Result};

/// A controlled edit that turns the simulated scene into its "real" twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Perturbation {
    AddObject {
        object: Object,
    },
    RemoveObject {
        id: String,
    },
    MoveObject {
        id: String,
        delta: [f64; 2],
    },
    /// Relative change of rendered brightness, in `[-1, 1]`.
    BrightnessShift {
        shift: f64,
    },
    /// Hue rotation in half-turns, in `[-1, 1]`.
    HueShift {
        shift: f64,
    },
    /// Seeded per-pixel Gaussian depth noise, stddev in meters.
    DepthNoise {
        stddev: f64,
        seed: u64,
    },
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        match self {
            Perturbation::BrightnessShift { shift } | Perturbation::HueShift { shift }
                if !(-1.0..=1.0).contains(shift) =>
            {
                Err(Error::InvalidArgument(format!(
                    "shift {shift} outside [-1, 1]"
                )))
            }
            Perturbation::DepthNoise { stddev, .. } if !(*stddev >= 0.0 && stddev.is_finite()) => {
                Err(Error::InvalidArgument(format!(
                    "depth noise stddev {stddev} invalid"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Returns a new scene with `p` applied; the input is left untouched.
pub fn apply_perturbation(scene: &Scene, p: &Perturbation) -> Result<Scene> {
    p.validate()?;
    let mut out = scene.clone();
    match p {
        Perturbation::AddObject { object } => {
            if out.object(&object.id).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "object `{}` already exists",
                    object.id
                )));
            }
            out.objects.push(object.clone());
        }
        Perturbation::RemoveObject { id } => {
            let before = out.objects.len();
            out.objects.retain(|o| &o.id != id);
            if out.objects.len() == before {
                return Err(Error::NoSuchObject(id.clone()));
            }
        }
        Perturbation::MoveObject { id, delta } => {
            let obj = out
                .objects
                .iter_mut()
                .find(|o| &o.id == id)
                .ok_or_else(|| Error::NoSuchObject(id.clone()))?;
            obj.footprint = obj.footprint.translated(*delta);
        }
        Perturbation::BrightnessShift { shift } => out.brightness_gain *= 1.0 + shift,
        Perturbation::HueShift { shift } => {
            out.hue_shift = (out.hue_shift + shift).clamp(-1.0, 1.0);
        }
        Perturbation::DepthNoise { stddev, seed } => {
            out.depth_noise = Some(DepthNoise {
                stddev: *stddev,
                seed: *seed,
            });
        }
    }
    out.validate()?;
    Ok(out)
}

pub fn apply_all(scene: &Scene, ps: &[Perturbation]) -> Result<Scene> {
    ps.iter()
        .try_fold(scene.clone(), |s, p| apply_perturbation(&s, p))
}
