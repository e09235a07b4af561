use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging;
use crate::sim::Observation;

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval(pub f64, pub f64);

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval(v, v)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        if self.0 == self.1 {
            self.0
        } else {
            self.0 + (self.1 - self.0) * u
        }
    }
}

/// Domain-randomization ranges. Sampled values use the same parameter
/// conventions as the input filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentRanges {
    pub hue: Interval,
    pub brightness: Interval,
    pub contrast: Interval,
    /// Lower and upper end of the depth window, as fractions of max depth.
    pub depth_lo: Interval,
    pub depth_hi: Interval,
}

impl AugmentRanges {
    pub fn identity() -> Self {
        Self {
            hue: Interval::point(0.0),
            brightness: Interval::point(0.0),
            contrast: Interval::point(0.0),
            depth_lo: Interval::point(0.0),
            depth_hi: Interval::point(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = [
            self.hue,
            self.brightness,
            self.contrast,
            self.depth_lo,
            self.depth_hi,
        ]
        .iter()
        .all(|i| i.0 <= i.1 && i.0.is_finite() && i.1.is_finite());
        let in_unit = |i: Interval| i.0 >= -1.0 && i.1 <= 1.0;
        if !ordered
            || !in_unit(self.hue)
            || !in_unit(self.brightness)
            || !in_unit(self.contrast)
            || self.depth_lo.0 < 0.0
            || self.depth_hi.1 > 1.0
            || self.depth_lo.1 >= self.depth_hi.0
        {
            return Err(Error::InvalidArgument(
                "augmentation ranges are not well-ordered".into(),
            ));
        }
        Ok(())
    }
}

impl Default for AugmentRanges {
    fn default() -> Self {
        Self {
            hue: Interval(-0.05, 0.05),
            brightness: Interval(-0.3, 0.3),
            contrast: Interval(-0.2, 0.2),
            depth_lo: Interval(0.0, 0.05),
            depth_hi: Interval(0.9, 1.0),
        }
    }
}

/// Samples one value per transform and applies hue → brightness →
/// contrast → depth window.
pub fn augment(obs: &Observation, ranges: &AugmentRanges, seed: u64) -> Observation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hue = ranges.hue.sample(&mut rng);
    let bright = ranges.brightness.sample(&mut rng);
    let contrast = ranges.contrast.sample(&mut rng);
    let lo = ranges.depth_lo.sample(&mut rng);
    let hi = ranges.depth_hi.sample(&mut rng);
    let mut out = obs.clone();
    imaging::hue_rotate(&mut out.rgb, hue);
    imaging::brightness(&mut out.rgb, bright);
    imaging::contrast(&mut out.rgb, contrast);
    imaging::depth_range(&mut out.depth, obs.camera.max_depth, lo, hi);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{presets, render, CameraSpec, Pose};

    fn obs() -> Observation {
        render(
            &presets::default_scene(),
            &CameraSpec::default(),
            &Pose::new(2.0, 5.0, 0.4),
        )
        .unwrap()
    }

    #[test]
    fn identity_ranges_leave_input_untouched() {
        let o = obs();
        assert_eq!(augment(&o, &AugmentRanges::identity(), 17), o);
    }

    #[test]
    fn fixed_brightness_is_pixelwise() {
        let o = obs();
        let r = AugmentRanges {
            brightness: Interval::point(0.2),
            ..AugmentRanges::identity()
        };
        let a = augment(&o, &r, 3);
        for (v, w) in o.rgb.iter().zip(&a.rgb) {
            assert_eq!(*w, (*v as f64 * 1.2).clamp(0.0, 255.0) as f32);
        }
        assert_eq!(a.depth, o.depth);
    }

    #[test]
    fn seeds_control_output() {
        let o = obs();
        let r = AugmentRanges::default();
        assert_eq!(augment(&o, &r, 5), augment(&o, &r, 5));
        assert_ne!(augment(&o, &r, 5), augment(&o, &r, 6));
    }

    #[test]
    fn validation() {
        assert!(AugmentRanges::default().validate().is_ok());
        let bad = AugmentRanges {
            brightness: Interval(0.3, -0.3),
            ..AugmentRanges::default()
        };
        assert!(bad.validate().is_err());
    }
}
