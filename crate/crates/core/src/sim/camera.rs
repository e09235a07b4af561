use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalizes an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Symmetric wrapped angular distance, always in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Camera pose on the floor plane: position in meters, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, alpha: f64) -> Self {
        Self {
            x,
            y,
            alpha: normalize_angle(alpha),
        }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSpec {
    /// Horizontal field of view in radians.
    pub hfov: f64,
    pub width: usize,
    pub height: usize,
    /// Depth sensor range in meters.
    pub max_depth: f64,
    pub eye_height_frac: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            hfov: PI / 2.0,
            width: 64,
            height: 64,
            max_depth: 10.0,
            eye_height_frac: 0.4,
        }
    }
}

impl CameraSpec {
    /// Paper-scale sensor resolution (256×256).
    pub fn full_scale() -> Self {
        Self {
            width: 256,
            height: 256,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hfov > 0.0 && self.hfov < PI) {
            return Err(Error::InvalidArgument(format!(
                "hfov {} outside (0, π)",
                self.hfov
            )));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidArgument(format!(
                "image size {}x{} below 16x16",
                self.width, self.height
            )));
        }
        if !(self.max_depth > 0.0) {
            return Err(Error::InvalidArgument("max_depth must be positive".into()));
        }
        if !(self.eye_height_frac > 0.0 && self.eye_height_frac < 1.0) {
            return Err(Error::InvalidArgument(
                "eye_height_frac must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Horizontal angle of column `c`'s ray relative to `alpha`.
    pub fn column_offset(&self, c: f64) -> f64 {
        self.hfov * (0.5 - (c + 0.5) / self.width as f64)
    }

    /// Focal length in pixels (square pixels).
    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.hfov / 2.0).tan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_normalization() {
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!((normalize_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
        assert!(normalize_angle(TAU) < 1e-15);
        let p = Pose::new(1.0, 2.0, -PI / 2.0);
        assert!((p.alpha - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn wrapped_distance_is_symmetric_and_bounded() {
        assert!((angular_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_distance(TAU - 0.1, 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_distance(0.0, PI) - PI).abs() < 1e-12);
        assert_eq!(angular_distance(1.0, 1.0), 0.0);
    }

    #[test]
    fn camera_validation() {
        assert!(CameraSpec::default().validate().is_ok());
        assert!(CameraSpec {
            hfov: PI,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CameraSpec {
            width: 8,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CameraSpec {
            max_depth: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
