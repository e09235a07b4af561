//! Bird's-eye accumulation grid and back-projection of image heatmaps.

use serde::{Deserialize, Serialize};

use crate::analysis::Heatmap;
use crate::error::{Error, Result};
use crate::par;
use crate::sim::{CameraSpec, Observation, Pose, Scene};
use crate::tensor::{Tensor, TensorData};

pub const DEFAULT_BLOCKS: usize = 264;
pub const MIN_BLOCKS: usize = 8;

/// World-space rectangle `[min, max)` covered by a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Extent {
    pub fn of_scene(scene: &Scene) -> Self {
        Self {
            min: [0.0, 0.0],
            max: scene.extent,
        }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AggregationStrategy {
    Sum,
    Mean,
    Max,
}

impl std::str::FromStr for AggregationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Self::Sum),
            "mean" => Ok(Self::Mean),
            "max" => Ok(Self::Max),
            _ => Err(Error::InvalidArgument(format!(
                "unknown aggregation strategy `{s}`"
            ))),
        }
    }
}

/// `B × B` blocks, row-major with row index along world y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoGrid {
    pub blocks: usize,
    pub extent: Extent,
    pub values: Vec<f64>,
    pub counts: Vec<u32>,
    pub normalized: bool,
    pub strategy: Option<AggregationStrategy>,
}

impl GeoGrid {
    pub fn new(blocks: usize, extent: Extent) -> Result<Self> {
        if blocks < MIN_BLOCKS {
            return Err(Error::InvalidArgument(format!(
                "geo grid needs at least {MIN_BLOCKS} blocks per side"
            )));
        }
        if !(extent.width() > 0.0 && extent.height() > 0.0) {
            return Err(Error::InvalidArgument("geo grid extent is empty".into()));
        }
        let n = blocks * blocks;
        Ok(Self {
            blocks,
            extent,
            values: vec![0.0; n],
            counts: vec![0; n],
            normalized: false,
            strategy: None,
        })
    }

    pub fn for_scene(scene: &Scene) -> Self {
        Self::new(DEFAULT_BLOCKS, Extent::of_scene(scene)).expect("scene extent validated")
    }

    pub fn block_size(&self) -> [f64; 2] {
        [
            self.extent.width() / self.blocks as f64,
            self.extent.height() / self.blocks as f64,
        ]
    }

    /// Flat index of the block whose center is nearest to `(x, y)`, i.e.
    /// the block containing it; `None` outside the extent.
    pub fn block_of(&self, x: f64, y: f64) -> Option<usize> {
        let fx = (x - self.extent.min[0]) / self.extent.width();
        let fy = (y - self.extent.min[1]) / self.extent.height();
        if !(0.0..1.0).contains(&fx) || !(0.0..1.0).contains(&fy) {
            return None;
        }
        let b = self.blocks;
        let (i, j) = (
            ((fx * b as f64) as usize).min(b - 1),
            ((fy * b as f64) as usize).min(b - 1),
        );
        Some(j * b + i)
    }

    pub fn block_center(&self, index: usize) -> [f64; 2] {
        let (i, j) = (index % self.blocks, index / self.blocks);
        let s = self.block_size();
        [
            self.extent.min[0] + (i as f64 + 0.5) * s[0],
            self.extent.min[1] + (j as f64 + 0.5) * s[1],
        ]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn support(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }

    fn check_compatible(&self, other: &GeoGrid) -> Result<()> {
        if self.blocks != other.blocks || self.extent != other.extent {
            return Err(Error::GridMismatch(format!(
                "{}x{} over {:?} vs {}x{} over {:?}",
                self.blocks, self.blocks, self.extent, other.blocks, other.blocks, other.extent
            )));
        }
        Ok(())
    }

    /// Rescale into `[0, 1]` over the supported blocks: divide by the max
    /// for nonnegative grids, min-max otherwise. All-zero grids stay zero.
    pub fn normalize(mut self) -> Self {
        let support: Vec<usize> = (0..self.values.len())
            .filter(|&k| self.counts[k] > 0)
            .collect();
        let lo = support
            .iter()
            .map(|&k| self.values[k])
            .fold(f64::INFINITY, f64::min);
        let hi = support
            .iter()
            .map(|&k| self.values[k])
            .fold(f64::NEG_INFINITY, f64::max);
        if support.is_empty() {
            // nothing to do
        } else if lo >= 0.0 {
            if hi > 0.0 {
                self.values.iter_mut().for_each(|v| *v /= hi);
            }
        } else {
            let span = hi - lo;
            for &k in &support {
                self.values[k] = if span > 0.0 {
                    (self.values[k] - lo) / span
                } else {
                    0.0
                };
            }
        }
        self.normalized = true;
        self
    }

    /// Indices of the top `fraction` of strictly positive blocks (at least one
    /// when any exists), ordered by value then index.
    pub fn top_blocks(&self, fraction: f64) -> Vec<usize> {
        let mut pos: Vec<usize> = (0..self.values.len())
            .filter(|&k| self.values[k] > 0.0)
            .collect();
        pos.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        let k = ((fraction * pos.len() as f64).ceil() as usize).clamp(pos.len().min(1), pos.len());
        pos.truncate(k);
        pos
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(
            self.blocks as u32,
            self.blocks as u32,
            1,
            TensorData::F64(self.values.clone()),
        )
        .expect("grid buffer matches its size")
    }

    pub fn metadata(&self) -> GridMetadata {
        GridMetadata {
            blocks: self.blocks,
            extent: self.extent,
            strategy: self.strategy,
            normalized: self.normalized,
            support: self.support(),
        }
    }

    /// Writes `<stem>.gst` (values) and `<stem>.json` (metadata).
    pub fn export(&self, dir: impl AsRef<std::path::Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.to_tensor().save(dir.join(format!("{stem}.gst")))?;
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_vec_pretty(&self.metadata())?,
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub blocks: usize,
    pub extent: Extent,
    pub strategy: Option<AggregationStrategy>,
    pub normalized: bool,
    pub support: usize,
}

/// Ground point seen along column `col` (fractional allowed) at horizontal
/// range `depth`; `None` for non-positive depth.
pub fn pixel_to_world(
    pose: &Pose,
    camera: &CameraSpec,
    col: f64,
    depth: f64,
) -> Option<(f64, f64)> {
    if !(depth > 0.0) {
        return None;
    }
    let theta = pose.alpha + camera.column_offset(col);
    Some((pose.x + depth * theta.cos(), pose.y + depth * theta.sin()))
}

/// Pooled cell size for back-projection: 128×128 at 256 px, scaled.
pub fn default_downsample(camera: &CameraSpec) -> (usize, usize) {
    (
        (camera.width * 128).div_ceil(256).max(1),
        (camera.height * 128).div_ceil(256).max(1),
    )
}

/// One back-projected sample: world point and heat value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundSample {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// Pools `heatmap` and depth to `(w, h)` cells and projects each cell with
/// valid depth. A cell's value is the heat of its valid pixels divided by
/// the cell's pixel count; its depth is the mean of those pixels' depths.
pub fn pooled_samples(
    heatmap: &Heatmap,
    obs: &Observation,
    downsample: (usize, usize),
) -> Result<Vec<GroundSample>> {
    let pose = obs.require_pose()?;
    let (iw, ih) = (obs.width(), obs.height());
    if heatmap.width != iw || heatmap.height != ih {
        return Err(Error::InvalidArgument(format!(
            "heatmap {}x{} does not match observation {iw}x{ih}; resample it first",
            heatmap.width, heatmap.height
        )));
    }
    let (pw, ph) = downsample;
    if pw == 0 || ph == 0 || pw > iw || ph > ih {
        return Err(Error::InvalidArgument(format!(
            "bad downsample {pw}x{ph} for {iw}x{ih} image"
        )));
    }
    let mut out = Vec::new();
    for j in 0..ph {
        let (r0, r1) = (j * ih / ph, (j + 1) * ih / ph);
        for i in 0..pw {
            let (c0, c1) = (i * iw / pw, (i + 1) * iw / pw);
            let (mut heat, mut dsum, mut valid) = (0.0, 0.0, 0usize);
            for r in r0..r1 {
                for c in c0..c1 {
                    let d = obs.depth_at(c, r);
                    if obs.depth_valid(d) {
                        heat += heatmap.get(c, r);
                        dsum += d as f64;
                        valid += 1;
                    }
                }
            }
            if valid == 0 {
                continue;
            }
            let col = (c0 + c1) as f64 / 2.0 - 0.5;
            let cells = ((r1 - r0) * (c1 - c0)) as f64;
            if let Some((x, y)) = pixel_to_world(&pose, &obs.camera, col, dsum / valid as f64) {
                out.push(GroundSample {
                    x,
                    y,
                    value: heat / cells,
                });
            }
        }
    }
    Ok(out)
}

/// Returns `grid` with one instance's pooled heatmap added to the nearest
/// blocks.
pub fn backproject(
    heatmap: &Heatmap,
    obs: &Observation,
    grid: &GeoGrid,
    downsample: (usize, usize),
) -> Result<GeoGrid> {
    let mut out = grid.clone();
    for s in pooled_samples(heatmap, obs, downsample)? {
        if let Some(k) = out.block_of(s.x, s.y) {
            out.values[k] += s.value;
            out.counts[k] += 1;
        }
    }
    out.normalized = false;
    Ok(out)
}

/// Block-wise running sum, count and maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    pub sum: Vec<f64>,
    pub counts: Vec<u32>,
    pub max: Vec<f64>,
}

impl Accumulator {
    pub fn new(cells: usize) -> Self {
        Self {
            sum: vec![0.0; cells],
            counts: vec![0; cells],
            max: vec![f64::NEG_INFINITY; cells],
        }
    }

    fn add_grid(&mut self, g: &GeoGrid) {
        for k in 0..g.values.len() {
            if g.counts[k] > 0 {
                self.sum[k] += g.values[k];
                self.counts[k] += g.counts[k];
                self.max[k] = self.max[k].max(g.values[k]);
            }
        }
    }

    fn merge(mut self, other: Accumulator) -> Self {
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.counts[k] += other.counts[k];
            self.max[k] = self.max[k].max(other.max[k]);
        }
        self
    }

    fn finish(self, template: &GeoGrid, strategy: AggregationStrategy) -> GeoGrid {
        let values = (0..self.sum.len())
            .map(|k| match (self.counts[k], strategy) {
                (0, _) => 0.0,
                (_, AggregationStrategy::Sum) => self.sum[k],
                (n, AggregationStrategy::Mean) => self.sum[k] / n as f64,
                (_, AggregationStrategy::Max) => self.max[k],
            })
            .collect();
        GeoGrid {
            values,
            counts: self.counts,
            normalized: false,
            strategy: Some(strategy),
            ..template.clone()
        }
        .normalize()
    }
}

/// Combines per-instance grids block-wise and normalizes the result.
/// SUM and MEAN use the accumulated values and counts; MAX takes the
/// largest per-instance value of each supported block.
pub fn aggregate(grids: &[GeoGrid], strategy: AggregationStrategy) -> Result<GeoGrid> {
    let first = grids.first().ok_or(Error::EmptySelection)?;
    for g in &grids[1..] {
        first.check_compatible(g)?;
    }
    let acc = par::chunked_fold(
        grids,
        || Accumulator::new(first.values.len()),
        |mut acc, g| {
            acc.add_grid(g);
            acc
        },
        Accumulator::merge,
    );
    Ok(acc.finish(first, strategy))
}

/// Back-projects each `(heatmap, observation)` pair into its own grid and
/// aggregates them, in input order.
pub fn aggregate_backprojections(
    items: &[(Heatmap, &Observation)],
    template: &GeoGrid,
    downsample: (usize, usize),
    strategy: AggregationStrategy,
) -> Result<GeoGrid> {
    if items.is_empty() {
        return Err(Error::EmptySelection);
    }
    let empty = GeoGrid {
        values: vec![0.0; template.values.len()],
        counts: vec![0; template.counts.len()],
        ..template.clone()
    };
    let per_instance = par::try_map(items, |(h, o)| backproject(h, o, &empty, downsample))?;
    aggregate(&per_instance, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::HeatmapMethod;
    use crate::sim::{presets, render};
    use std::f64::consts::PI;

    fn extent() -> Extent {
        Extent {
            min: [0.0, 0.0],
            max: [22.0, 22.0],
        }
    }

    #[test]
    fn center_pixel_axis_aligned() {
        let cam = CameraSpec {
            width: 65,
            ..CameraSpec::default()
        };
        let (x, y) = pixel_to_world(&Pose::new(3.0, 4.0, 0.0), &cam, 32.0, 2.0).unwrap();
        assert!((x - 5.0).abs() < 1e-12 && y.abs() - 4.0 < 1e-12);
        assert!(pixel_to_world(&Pose::new(3.0, 4.0, 0.0), &cam, 32.0, 0.0).is_none());
    }

    #[test]
    fn leftmost_column_angle() {
        let cam = CameraSpec::default();
        let w = cam.width as f64;
        let (x, y) = pixel_to_world(&Pose::new(0.0, 0.0, 0.0), &cam, 0.0, 1.0).unwrap();
        assert!((y.atan2(x) - PI / 4.0 * (1.0 - 1.0 / w)).abs() < 1e-12);
    }

    #[test]
    fn grid_validation_and_blocks() {
        assert!(GeoGrid::new(4, extent()).is_err());
        let g = GeoGrid::new(11, extent()).unwrap();
        assert_eq!(g.block_of(0.0, 0.0), Some(0));
        assert_eq!(g.block_of(21.99, 21.99), Some(120));
        assert_eq!(g.block_of(22.0, 1.0), None);
        assert_eq!(g.block_center(12), [3.0, 3.0]);
    }

    #[test]
    fn zero_heatmap_leaves_values_unchanged() {
        let cam = CameraSpec::default();
        let obs = render(&presets::default_scene(), &cam, &Pose::new(2.0, 2.0, 0.7)).unwrap();
        let h = Heatmap::new(HeatmapMethod::Activation, 64, 64, vec![0.0; 64 * 64]);
        let g = GeoGrid::new(64, extent()).unwrap();
        let out = backproject(&h, &obs, &g, default_downsample(&cam)).unwrap();
        assert_eq!(out.values, g.values);
    }

    #[test]
    fn missing_pose_is_rejected() {
        let mut obs = Observation::blank(CameraSpec::default());
        obs.pose_gt = None;
        let h = Heatmap::new(HeatmapMethod::Activation, 64, 64, vec![1.0; 64 * 64]);
        let err =
            backproject(&h, &obs, &GeoGrid::new(16, extent()).unwrap(), (32, 32)).unwrap_err();
        assert_eq!(err.code(), "NO_GROUND_TRUTH");
    }

    #[test]
    fn normalize_signed_and_empty() {
        let mut g = GeoGrid::new(8, extent()).unwrap();
        assert!(g.clone().normalize().values.iter().all(|v| *v == 0.0));
        g.values[0] = -2.0;
        g.values[1] = 2.0;
        g.counts[0] = 1;
        g.counts[1] = 1;
        let n = g.normalize();
        assert_eq!((n.values[0], n.values[1], n.values[2]), (0.0, 1.0, 0.0));
    }

    #[test]
    fn aggregate_rejects_mismatch() {
        let a = GeoGrid::new(8, extent()).unwrap();
        let b = GeoGrid::new(9, extent()).unwrap();
        assert_eq!(
            aggregate(&[a, b], AggregationStrategy::Sum)
                .unwrap_err()
                .code(),
            "GRID_MISMATCH"
        );
    }

    #[test]
    fn mean_divides_by_counts() {
        let mut a = GeoGrid::new(8, extent()).unwrap();
        a.values[3] = 4.0;
        a.counts[3] = 2;
        let mut b = a.clone();
        b.values[3] = 2.0;
        b.counts[3] = 2;
        b.values[5] = 1.0;
        b.counts[5] = 1;
        let m = aggregate(&[a.clone(), b.clone()], AggregationStrategy::Mean).unwrap();
        // 6/4 = 1.5 and 1/1 = 1, normalized by 1.5
        assert!((m.values[3] - 1.0).abs() < 1e-12 && (m.values[5] - 1.0 / 1.5).abs() < 1e-12);
        let x = aggregate(&[a, b], AggregationStrategy::Max).unwrap();
        assert!((x.values[5] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn top_blocks_positive_only() {
        let mut g = GeoGrid::new(8, extent()).unwrap();
        g.values[7] = 0.5;
        g.values[9] = 1.0;
        g.values[2] = -1.0;
        assert_eq!(g.top_blocks(0.05), vec![9]);
        assert_eq!(g.top_blocks(1.0), vec![9, 7]);
    }
}
