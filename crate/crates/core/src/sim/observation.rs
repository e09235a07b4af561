use serde::{Deserialize, Serialize};

use super::camera::{CameraSpec, Pose};
use crate::error::{Error, Result};
use crate::tensor::{Tensor, TensorData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum World {
    Sim,
    Real,
}

/// An RGB-D image. `rgb` is row-major `(row, col, channel)` with values in
/// `[0, 255]`; `depth` is row-major meters in `[0, max_depth]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub camera: CameraSpec,
    pub rgb: Vec<f32>,
    pub depth: Vec<f32>,
    pub pose_gt: Option<Pose>,
    pub world: World,
}

impl Observation {
    /// All-zero RGB and depth, as used by the blank-input probe.
    pub fn blank(camera: CameraSpec) -> Self {
        let n = camera.width * camera.height;
        Self {
            camera,
            rgb: vec![0.0; n * 3],
            depth: vec![0.0; n],
            pose_gt: None,
            world: World::Real,
        }
    }

    /// Mid-gray RGB at half depth range: the frame whose network input is
    /// all zeros.
    pub fn mid_gray(camera: CameraSpec) -> Self {
        let n = camera.width * camera.height;
        let depth = (camera.max_depth / 2.0) as f32;
        Self {
            camera,
            rgb: vec![127.5; n * 3],
            depth: vec![depth; n],
            pose_gt: None,
            world: World::Real,
        }
    }

    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn pixel_count(&self) -> usize {
        self.camera.width * self.camera.height
    }

    pub fn depth_at(&self, col: usize, row: usize) -> f32 {
        self.depth[row * self.camera.width + col]
    }

    pub fn rgb_at(&self, col: usize, row: usize) -> [f32; 3] {
        let i = (row * self.camera.width + col) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Same width, height and sensor range; poses may differ.
    pub fn same_shape(&self, other: &Observation) -> bool {
        self.camera == other.camera
            && self.rgb.len() == other.rgb.len()
            && self.depth.len() == other.depth.len()
    }

    /// `W×H×4` stack with depth rescaled to `[0, 255]` by `max_depth`.
    pub fn stacked(&self) -> Vec<f32> {
        let scale = 255.0 / self.camera.max_depth;
        let mut out = Vec::with_capacity(self.pixel_count() * 4);
        for (px, d) in self.rgb.chunks_exact(3).zip(&self.depth) {
            out.extend_from_slice(px);
            out.push((*d as f64 * scale) as f32);
        }
        out
    }

    /// Four-channel tensor: RGB in `[0, 255]` plus raw depth in meters.
    pub fn to_tensor(&self) -> Tensor {
        let mut data = Vec::with_capacity(self.pixel_count() * 4);
        for (px, d) in self.rgb.chunks_exact(3).zip(&self.depth) {
            data.extend_from_slice(px);
            data.push(*d);
        }
        Tensor::new(
            self.camera.width as u32,
            self.camera.height as u32,
            4,
            TensorData::F32(data),
        )
        .expect("observation buffers match camera")
    }

    pub fn from_tensor(
        t: &Tensor,
        camera: CameraSpec,
        pose_gt: Option<Pose>,
        world: World,
    ) -> Result<Self> {
        if t.width as usize != camera.width || t.height as usize != camera.height || t.channels != 4
        {
            return Err(Error::InputShapeMismatch {
                expected: format!("{}x{}x4", camera.width, camera.height),
                got: format!("{}x{}x{}", t.width, t.height, t.channels),
            });
        }
        let data = t
            .as_f32()
            .ok_or_else(|| Error::Format("observation tensor must be f32".into()))?;
        let mut rgb = Vec::with_capacity(camera.width * camera.height * 3);
        let mut depth = Vec::with_capacity(camera.width * camera.height);
        for px in data.chunks_exact(4) {
            rgb.extend_from_slice(&px[..3]);
            depth.push(px[3]);
        }
        Ok(Self {
            camera,
            rgb,
            depth,
            pose_gt,
            world,
        })
    }

    /// Either the ground-truth pose or `NO_GROUND_TRUTH`.
    pub fn require_pose(&self) -> Result<Pose> {
        self.pose_gt.ok_or(Error::NoGroundTruth)
    }

    /// Depth readings at or beyond the sensor range carry no geometry.
    pub fn depth_valid(&self, d: f32) -> bool {
        d > 0.0 && (d as f64) < self.camera.max_depth
    }
}
