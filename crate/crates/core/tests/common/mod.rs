//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use gapscope_core::analysis::{Heatmap, OcclusionChannel, PatchGrid};
use gapscope_core::geo::GeoGrid;
use gapscope_core::model::{
    loss_gradient, mean_loss, Architecture, ConvSpec, ModelParams, OutputScale, Sample, VariantTag,
};
use gapscope_core::sim::{presets, render, CameraSpec, Observation, Pose};

/// Per-pixel projection without pooling. Each valid pixel carries its heat
/// scaled by the pixel share of one pooled cell so masses are comparable.
pub fn brute_force_backproject(
    h: &Heatmap,
    obs: &Observation,
    grid: &GeoGrid,
    downsample: (usize, usize),
) -> GeoGrid {
    let pose = obs.pose_gt.unwrap();
    let cam = obs.camera;
    let share = (downsample.0 * downsample.1) as f64 / (cam.width * cam.height) as f64;
    let mut out = grid.clone();
    for r in 0..cam.height {
        for c in 0..cam.width {
            let d = obs.depth[r * cam.width + c] as f64;
            if d <= 0.0 || d >= cam.max_depth {
                continue;
            }
            let theta = pose.alpha + cam.hfov * (0.5 - (c as f64 + 0.5) / cam.width as f64);
            let (x, y) = (pose.x + d * theta.cos(), pose.y + d * theta.sin());
            let bs = (grid.extent.max[0] - grid.extent.min[0]) / grid.blocks as f64;
            let (i, j) = (
                ((x - grid.extent.min[0]) / bs).floor(),
                ((y - grid.extent.min[1]) / bs).floor(),
            );
            if i < 0.0 || j < 0.0 || i >= grid.blocks as f64 || j >= grid.blocks as f64 {
                continue;
            }
            let k = j as usize * grid.blocks + i as usize;
            out.values[k] += h.values[r * cam.width + c] * share;
            out.counts[k] += 1;
        }
    }
    out
}

/// Occlusion by rebuilding every patched observation pixel by pixel.
pub fn naive_occlusion(
    model: &ModelParams,
    real: &Observation,
    sim: &Observation,
    gt: &Pose,
    channel: OcclusionChannel,
    grid: PatchGrid,
) -> Heatmap {
    let (w, h) = (real.width(), real.height());
    let e0 = model.forward(real).unwrap().pose_pred.distance(gt);
    let (rgb, depth) = match channel {
        OcclusionChannel::Rgb => (true, false),
        OcclusionChannel::Depth => (false, true),
        OcclusionChannel::Both => (true, true),
    };
    let mut values = Vec::new();
    for j in 0..grid.gy {
        for i in 0..grid.gx {
            let c0 = i * w / grid.gx;
            let r0 = j * h / grid.gy;
            let mut patched = real.clone();
            for r in r0..(r0 + grid.patch_px).min(h) {
                for c in c0..(c0 + grid.patch_px).min(w) {
                    let p = r * w + c;
                    if rgb {
                        for k in 0..3 {
                            patched.rgb[p * 3 + k] = sim.rgb[p * 3 + k];
                        }
                    }
                    if depth {
                        patched.depth[p] = sim.depth[p];
                    }
                }
            }
            values.push(model.forward(&patched).unwrap().pose_pred.distance(gt) - e0);
        }
    }
    Heatmap::new(channel.method(), grid.gx, grid.gy, values)
}

/// Record with the given id and real error; everything else fixed.
pub fn record(id: u32, err_real: f64) -> gapscope_core::analysis::PredictionRecord {
    let p = Pose::new(1.0, 1.0, 0.0);
    gapscope_core::analysis::PredictionRecord {
        id,
        pose_gt: p,
        pred_sim: p,
        pred_real: p,
        embedding_sim: vec![0.0],
        embedding_real: vec![0.0],
        err_sim: 0.0,
        err_real,
        ang_err_sim: 0.0,
        ang_err_real: 0.0,
        simreal_divergence: 0.0,
        room: None,
    }
}

/// ⌈15·N / 100⌉ in integer arithmetic.
pub fn ceil_15_percent(n: usize) -> usize {
    (15 * n).div_ceil(100)
}

pub const EPS: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-3;
/// Entries where both the analytic and numeric value are this small are
/// dominated by rounding and not compared relatively.
pub const ABS_FLOOR: f64 = 1e-7;

pub fn small_model(seed: u64) -> ModelParams {
    let arch = Architecture {
        input_width: 16,
        input_height: 16,
        convs: vec![
            ConvSpec {
                out_channels: 6,
                kernel: 3,
                stride: 2,
            },
            ConvSpec {
                out_channels: 8,
                kernel: 3,
                stride: 2,
            },
            ConvSpec {
                out_channels: 12,
                kernel: 3,
                stride: 1,
            },
        ],
        output_scale: OutputScale::for_extent([22.0, 22.0]),
    };
    let mut m = ModelParams::init(arch, VariantTag::Vanilla, seed, 0.3, 10.0).unwrap();
    // Nonzero biases keep the check away from exact ReLU kinks at zero.
    for (k, s) in m.slices_mut().into_iter().enumerate() {
        if s.len() <= 12 {
            s.iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v += 0.01 * ((i + k) % 5) as f64 + 0.003);
        }
    }
    m
}

pub fn observations() -> Vec<(Observation, Pose)> {
    let cam = CameraSpec {
        width: 16,
        height: 16,
        ..CameraSpec::default()
    };
    let scene = presets::default_scene();
    [
        Pose::new(2.0, 3.0, 0.4),
        Pose::new(11.0, 9.0, 2.5),
        Pose::new(20.0, 19.0, 5.0),
    ]
    .iter()
    .map(|p| {
        (
            render(&scene, &cam, p).unwrap(),
            Pose::new(p.x + 1.5, p.y - 2.0, p.alpha + 0.7),
        )
    })
    .collect()
}

pub struct GradCheck {
    pub parameters: usize,
    pub compared: usize,
    pub kinked: usize,
    pub max_rel: f64,
    /// First entry over tolerance: (index, analytic, numeric).
    pub first_failure: Option<(usize, f64, f64)>,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel < REL_TOL
            && self.compared > self.parameters / 2
            && self.kinked * 100 <= self.parameters
    }
}

/// Analytic gradients of the small fixture against central differences.
/// Parameters whose ReLU pattern flips inside [-EPS, EPS] are skipped: the
/// one-sided slopes disagree there and central differences are meaningless.
pub fn gradient_check() -> GradCheck {
    let data = observations();
    let batch: Vec<Sample> = data
        .iter()
        .map(|(o, t)| Sample { obs: o, target: *t })
        .collect();
    let model = small_model(11);
    let (_, grads) = loss_gradient(&model, &batch).unwrap();
    let analytic = grads.flatten();

    let base = mean_loss(&model, &batch).unwrap();
    let mut numeric = Vec::with_capacity(analytic.len());
    let mut kinked = Vec::new();
    let sizes: Vec<usize> = model.slices().iter().map(|s| s.len()).collect();
    for (k, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            let mut plus = model.clone();
            plus.slices_mut()[k][i] += EPS;
            let mut minus = model.clone();
            minus.slices_mut()[k][i] -= EPS;
            let (lp, lm) = (
                mean_loss(&plus, &batch).unwrap(),
                mean_loss(&minus, &batch).unwrap(),
            );
            let (right, left) = ((lp - base) / EPS, (base - lm) / EPS);
            if (right - left).abs() > 2e-3 * right.abs().max(left.abs()).max(1e-3) {
                kinked.push(numeric.len());
            }
            numeric.push((lp - lm) / (2.0 * EPS));
        }
    }
    assert_eq!(numeric.len(), analytic.len());

    let mut out = GradCheck {
        parameters: analytic.len(),
        compared: 0,
        kinked: kinked.len(),
        max_rel: 0.0,
        first_failure: None,
    };
    for (j, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let scale = a.abs().max(n.abs());
        if scale < ABS_FLOOR || kinked.contains(&j) {
            continue;
        }
        out.compared += 1;
        let rel = (a - n).abs() / scale;
        if rel >= REL_TOL && out.first_failure.is_none() {
            out.first_failure = Some((j, *a, *n));
        }
        out.max_rel = out.max_rel.max(rel);
    }
    out
}
