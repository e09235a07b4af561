//! Sim/real occlusion: patches of the real input are replaced by the
//! matching sim pixels and the change in position error is recorded.
//! Negative cells mean the sim content brings the prediction closer to the
//! ground truth, i.e. a strong sim2real gap at that location.

use serde::{Deserialize, Serialize};

use super::heatmap::{Heatmap, HeatmapMethod};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::par;
use crate::sim::{CameraSpec, Observation, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcclusionChannel {
    Rgb,
    Depth,
    /// RGB then depth from the same patch.
    Both,
}

impl OcclusionChannel {
    fn rows(self) -> std::ops::Range<usize> {
        match self {
            OcclusionChannel::Rgb => 0..3,
            OcclusionChannel::Depth => 3..4,
            OcclusionChannel::Both => 0..4,
        }
    }

    pub fn method(self) -> HeatmapMethod {
        match self {
            OcclusionChannel::Rgb => HeatmapMethod::OcclusionRgb,
            OcclusionChannel::Depth => HeatmapMethod::OcclusionDepth,
            OcclusionChannel::Both => HeatmapMethod::OcclusionBoth,
        }
    }
}

/// Patch placement: `gx × gy` origins at stride `W/gx`, `H/gy`, each patch
/// `patch_px` wide and clipped at the image border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub gx: usize,
    pub gy: usize,
    pub patch_px: usize,
}

impl PatchGrid {
    /// 6×6 grid with 40-pixel patches at 256 px, scaled with image width.
    pub fn for_camera(cam: &CameraSpec) -> Self {
        Self {
            gx: 6,
            gy: 6,
            patch_px: (cam.width * 40).div_ceil(256),
        }
    }

    /// `(col0, col1, row0, row1)` half-open pixel bounds of cell `(i, j)`.
    pub fn cell_bounds(
        &self,
        i: usize,
        j: usize,
        width: usize,
        height: usize,
    ) -> (usize, usize, usize, usize) {
        let c0 = i * width / self.gx;
        let r0 = j * height / self.gy;
        (
            c0,
            (c0 + self.patch_px).min(width),
            r0,
            (r0 + self.patch_px).min(height),
        )
    }

    fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.gx == 0 || self.gy == 0 || self.patch_px == 0 || self.gx > width || self.gy > height
        {
            return Err(Error::InvalidArgument(format!("bad patch grid {self:?}")));
        }
        Ok(())
    }
}

pub(crate) fn check_pair(real: &Observation, sim: &Observation) -> Result<Pose> {
    if !real.same_shape(sim) {
        return Err(Error::PairMismatch("observations differ in shape".into()));
    }
    match (real.pose_gt, sim.pose_gt) {
        (Some(a), Some(b)) if a != b => Err(Error::PairMismatch(
            "observations carry different poses".into(),
        )),
        (a, b) => a.or(b).ok_or(Error::NoGroundTruth),
    }
}

/// Signed `gx × gy` grid of `e_patched − e_real` in meters.
pub fn occlusion_map(
    model: &ModelParams,
    real: &Observation,
    sim: &Observation,
    gt: &Pose,
    channel: OcclusionChannel,
    grid: PatchGrid,
) -> Result<Heatmap> {
    check_pair(real, sim)?;
    let (w, h) = (real.width(), real.height());
    grid.validate(w, h)?;
    let real_in = model.input_tensor(real)?;
    let sim_in = model.input_tensor(sim)?;
    let baseline = model.forward_input(real_in.clone()).pose_pred.distance(gt);

    let cells = grid.gx * grid.gy;
    let deltas = par::map_range(cells, |k| {
        let (i, j) = (k % grid.gx, k / grid.gx);
        let (c0, c1, r0, r1) = grid.cell_bounds(i, j, w, h);
        let mut x = real_in.clone();
        for ch in channel.rows() {
            for r in r0..r1 {
                let span = r * w + c0..r * w + c1;
                x.row_mut(ch).as_slice_mut().unwrap()[span.clone()]
                    .copy_from_slice(&sim_in.row(ch).as_slice().unwrap()[span]);
            }
        }
        model.forward_input(x).pose_pred.distance(gt) - baseline
    });
    Ok(Heatmap::new(channel.method(), grid.gx, grid.gy, deltas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Architecture, VariantTag};
    use crate::sim::{presets, render, Perturbation};

    fn setup() -> (ModelParams, Observation, Observation) {
        let base = presets::default_scene();
        let real_scene =
            crate::sim::apply_perturbation(&base, &Perturbation::BrightnessShift { shift: -0.3 })
                .unwrap();
        let cam = CameraSpec::default();
        let p = Pose::new(6.0, 11.0, 0.1);
        let sim = render(&base, &cam, &p).unwrap();
        let mut real = render(&real_scene, &cam, &p).unwrap();
        real.world = crate::sim::World::Real;
        let m = ModelParams::init(
            Architecture::desk(64, 64, [22.0, 22.0]),
            VariantTag::Vanilla,
            2,
            0.3,
            10.0,
        )
        .unwrap();
        (m, real, sim)
    }

    #[test]
    fn default_grid_scales_patch() {
        assert_eq!(PatchGrid::for_camera(&CameraSpec::default()).patch_px, 10);
        assert_eq!(
            PatchGrid::for_camera(&CameraSpec::full_scale()).patch_px,
            40
        );
        let g = PatchGrid::for_camera(&CameraSpec::default());
        assert_eq!(g.cell_bounds(5, 5, 64, 64), (53, 63, 53, 63));
    }

    #[test]
    fn identical_pair_gives_zero_map() {
        let (m, real, _) = setup();
        let gt = real.pose_gt.unwrap();
        let h = occlusion_map(
            &m,
            &real,
            &real,
            &gt,
            OcclusionChannel::Rgb,
            PatchGrid::for_camera(&real.camera),
        )
        .unwrap();
        assert_eq!(h.values.len(), 36);
        assert!(h.values.iter().all(|v| *v == 0.0));
        assert!(h.signed);
    }

    #[test]
    fn full_patch_matches_sim_prediction() {
        let (m, real, sim) = setup();
        let gt = real.pose_gt.unwrap();
        let grid = PatchGrid {
            gx: 1,
            gy: 1,
            patch_px: 64,
        };
        let h = occlusion_map(&m, &real, &sim, &gt, OcclusionChannel::Both, grid).unwrap();
        let e_real = m.forward(&real).unwrap().pose_pred.distance(&gt);
        let e_sim = m.forward(&sim).unwrap().pose_pred.distance(&gt);
        assert!((e_real + h.values[0] - e_sim).abs() < 1e-12);
    }

    #[test]
    fn mismatched_pair_rejected() {
        let (m, real, _) = setup();
        let other = render(
            &presets::default_scene(),
            &real.camera,
            &Pose::new(2.0, 2.0, 0.0),
        )
        .unwrap();
        let gt = real.pose_gt.unwrap();
        let err = occlusion_map(
            &m,
            &real,
            &other,
            &gt,
            OcclusionChannel::Rgb,
            PatchGrid::for_camera(&real.camera),
        )
        .unwrap_err();
        assert_eq!(err.code(), "PAIR_MISMATCH");
    }
}
