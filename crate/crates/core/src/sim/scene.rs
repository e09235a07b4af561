use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

pub const SCENE_SCHEMA: u32 = 1;

/// Minimum distance a camera keeps from any wall segment or object outline.
pub const CAMERA_CLEARANCE: f64 = 0.15;

/// A vertical wall standing on the segment `a`–`b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Footprint {
    Rect { min: [f64; 2], max: [f64; 2] },
    Disc { center: [f64; 2], radius: f64 },
}

impl Footprint {
    pub fn area(&self) -> f64 {
        match self {
            Footprint::Rect { min, max } => (max[0] - min[0]).max(0.0) * (max[1] - min[1]).max(0.0),
            Footprint::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Footprint::Rect { min, max } => (*min, *max),
            Footprint::Disc { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
        }
    }

    /// Signed-ish distance test: true when `p` is inside the footprint grown
    /// by `margin`.
    pub fn contains(&self, p: [f64; 2], margin: f64) -> bool {
        match self {
            Footprint::Rect { min, max } => {
                let dx = (min[0] - p[0]).max(p[0] - max[0]).max(0.0);
                let dy = (min[1] - p[1]).max(p[1] - max[1]).max(0.0);
                let inside = p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1];
                inside || dx.hypot(dy) < margin
            }
            Footprint::Disc { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < radius + margin
            }
        }
    }

    pub fn translated(&self, delta: [f64; 2]) -> Footprint {
        match self {
            Footprint::Rect { min, max } => Footprint::Rect {
                min: [min[0] + delta[0], min[1] + delta[1]],
                max: [max[0] + delta[0], max[1] + delta[1]],
            },
            Footprint::Disc { center, radius } => Footprint::Disc {
                center: [center[0] + delta[0], center[1] + delta[1]],
                radius: *radius,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Object {
    pub id: String,
    pub footprint: Footprint,
    /// Height as a fraction of the wall height, in `(0, 1]`.
    pub height_frac: f64,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Room {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x < self.max[0] && y >= self.min[1] && y < self.max[1]
    }
}

/// Per-pixel Gaussian noise added to rendered depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthNoise {
    pub stddev: f64,
    pub seed: u64,
}

fn default_schema() -> u32 {
    SCENE_SCHEMA
}
fn default_wall_height() -> f64 {
    2.5
}
fn default_one() -> f64 {
    1.0
}
fn default_falloff() -> f64 {
    0.15
}

/// A 2-D floor map with walls, objects and named rooms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default = "default_schema")]
    pub schema: u32,
    /// World size `(width_m, height_m)`; the map spans `[0, w] × [0, h]`.
    pub extent: [f64; 2],
    #[serde(default = "default_wall_height")]
    pub wall_height: f64,
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub objects: Vec<Object>,
    #[serde(default)]
    pub rooms: Vec<Room>,
    pub floor_color: Rgb,
    pub ceiling_color: Rgb,
    #[serde(default = "default_one")]
    pub ambient_brightness: f64,
    /// Multiplicative gain applied on top of ambient shading.
    #[serde(default = "default_one")]
    pub brightness_gain: f64,
    /// Hue rotation in half-turns, `[-1, 1]`.
    #[serde(default)]
    pub hue_shift: f64,
    /// Distance falloff constant `k` in `1 / (1 + k·depth)`.
    #[serde(default = "default_falloff")]
    pub falloff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_noise: Option<DepthNoise>,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&Object> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn diagonal(&self) -> f64 {
        self.extent[0].hypot(self.extent[1])
    }

    pub fn room_at(&self, x: f64, y: f64) -> Option<&Room> {
        self.rooms.iter().find(|r| r.contains(x, y))
    }

    fn inside_extent(&self, p: [f64; 2]) -> bool {
        p[0] >= 0.0 && p[0] <= self.extent[0] && p[1] >= 0.0 && p[1] <= self.extent[1]
    }

    /// True when a camera may stand at `(x, y)`: inside the extent, clear of
    /// walls and outside every object footprint.
    pub fn is_free(&self, x: f64, y: f64) -> bool {
        let p = [x, y];
        let m = CAMERA_CLEARANCE;
        if !(x >= m && x <= self.extent[0] - m && y >= m && y <= self.extent[1] - m) {
            return false;
        }
        if self
            .walls
            .iter()
            .any(|w| point_segment_distance(p, w.a, w.b) < m)
        {
            return false;
        }
        !self.objects.iter().any(|o| o.footprint.contains(p, m))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScene(msg));
        if self.schema != SCENE_SCHEMA {
            return bad(format!("unsupported schema {}", self.schema));
        }
        if !(self.extent[0] > 0.0 && self.extent[1] > 0.0) {
            return bad("extent must be strictly positive".into());
        }
        if !(self.wall_height > 0.0) {
            return bad("wall_height must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.ambient_brightness) {
            return bad("ambient_brightness outside [0, 1]".into());
        }
        if !(self.brightness_gain >= 0.0) || !(-1.0..=1.0).contains(&self.hue_shift) {
            return bad("brightness gain or hue shift out of range".into());
        }
        if !(self.falloff >= 0.0) {
            return bad("falloff must be non-negative".into());
        }
        let mut ids = HashSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return bad(format!("duplicate object id `{}`", o.id));
            }
            if !(o.footprint.area() > 0.0) {
                return bad(format!("object `{}` has empty footprint", o.id));
            }
            if !(o.height_frac > 0.0 && o.height_frac <= 1.0) {
                return bad(format!("object `{}` height_frac outside (0, 1]", o.id));
            }
            let (lo, hi) = o.footprint.bounds();
            if !self.inside_extent(lo) || !self.inside_extent(hi) {
                return bad(format!("object `{}` leaves the scene extent", o.id));
            }
        }
        let mut names = HashSet::new();
        for r in &self.rooms {
            if !names.insert(r.name.as_str()) {
                return bad(format!("duplicate room name `{}`", r.name));
            }
            if !(r.min[0] < r.max[0] && r.min[1] < r.max[1]) {
                return bad(format!("room `{}` is empty", r.name));
            }
            if !self.inside_extent(r.min) || !self.inside_extent(r.max) {
                return bad(format!("room `{}` leaves the scene extent", r.name));
            }
        }
        if !self.has_free_cell() {
            return bad("scene has no free space".into());
        }
        Ok(())
    }

    fn has_free_cell(&self) -> bool {
        let steps = 64;
        (0..steps).any(|i| {
            (0..steps).any(|j| {
                let x = (i as f64 + 0.5) / steps as f64 * self.extent[0];
                let y = (j as f64 + 0.5) / steps as f64 * self.extent[1];
                self.is_free(x, y)
            })
        })
    }
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - (a[0] + t * dx)).hypot(p[1] - (a[1] + t * dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::presets;

    #[test]
    fn default_scene_is_valid_and_roundtrips() {
        let s = presets::default_scene();
        s.validate().unwrap();
        let back = Scene::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn duplicate_room_names_rejected() {
        let mut s = presets::default_scene();
        let r = s.rooms[0].clone();
        s.rooms.push(r);
        assert!(matches!(s.validate(), Err(Error::InvalidScene(_))));
    }

    #[test]
    fn object_outside_extent_rejected() {
        let mut s = presets::default_scene();
        s.objects.push(Object {
            id: "outside".into(),
            footprint: Footprint::Disc {
                center: [21.9, 5.0],
                radius: 0.5,
            },
            height_frac: 0.5,
            color: [1, 2, 3],
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn freedom_respects_walls_and_objects() {
        let s = presets::default_scene();
        assert!(!s.is_free(0.01, 5.0));
        let o = &s.objects[0];
        let (lo, hi) = o.footprint.bounds();
        assert!(!s.is_free((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0));
    }

    #[test]
    fn segment_distance() {
        assert!((point_segment_distance([0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((point_segment_distance([3.0, 0.0], [-1.0, 0.0], [1.0, 0.0]) - 2.0).abs() < 1e-12);
    }
}
