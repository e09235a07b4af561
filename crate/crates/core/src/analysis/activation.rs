//! Regression activation mapping: last-layer feature maps weighted by the
//! fully-connected head.

use serde::{Deserialize, Serialize};

use super::heatmap::{Heatmap, HeatmapMethod, Interp, Normalization};
use crate::error::Result;
use crate::model::ModelParams;
use crate::sim::Observation;

/// How the four regression heads are folded into one channel weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadAggregation {
    /// `w_c = Σ_o |W[o, c]|`.
    #[default]
    AbsSum,
    /// Signed weights of a single head (0 = x, 1 = y, 2 = sin α, 3 = cos α).
    Head(usize),
}

pub fn channel_weights(model: &ModelParams, agg: HeadAggregation) -> Vec<f64> {
    let w = &model.fc_weight;
    (0..w.ncols())
        .map(|c| match agg {
            HeadAggregation::AbsSum => (0..w.nrows()).map(|o| w[[o, c]].abs()).sum(),
            HeadAggregation::Head(o) => w[[o.min(w.nrows() - 1), c]],
        })
        .collect()
}

/// Activation map at image resolution, min-max normalized to `[0, 1]`.
pub fn activation_map(
    model: &ModelParams,
    obs: &Observation,
    agg: HeadAggregation,
) -> Result<Heatmap> {
    activation_map_with(model, obs, agg, Normalization::PerImage)
}

pub fn activation_map_with(
    model: &ModelParams,
    obs: &Observation,
    agg: HeadAggregation,
    norm: Normalization,
) -> Result<Heatmap> {
    let r = model.forward(obs)?;
    let weights = channel_weights(model, agg);
    let (ch, h, w) = r.feature_map.dim();
    let mut grid = vec![0.0; h * w];
    for (c, &wc) in weights.iter().enumerate().take(ch) {
        for v in 0..h {
            for u in 0..w {
                grid[v * w + u] += wc * r.feature_map[[c, v, u]];
            }
        }
    }
    let coarse = Heatmap::new(HeatmapMethod::Activation, w, h, grid);
    let fine = coarse.resample(obs.width(), obs.height(), Interp::Bilinear);
    Ok(match norm {
        Normalization::PerImage => fine.normalized(),
        Normalization::None => fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Architecture, VariantTag};
    use crate::sim::{presets, render, CameraSpec, Pose};

    fn model() -> ModelParams {
        ModelParams::init(
            Architecture::desk(64, 64, [22.0, 22.0]),
            VariantTag::Vanilla,
            5,
            0.3,
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_input_gives_zero_map() {
        let h = activation_map(
            &model(),
            &Observation::mid_gray(CameraSpec::default()),
            HeadAggregation::AbsSum,
        )
        .unwrap();
        assert!(h.values.iter().all(|v| *v == 0.0));
        assert_eq!((h.width, h.height), (64, 64));
    }

    #[test]
    fn map_is_unit_normalized() {
        let obs = render(
            &presets::default_scene(),
            &CameraSpec::default(),
            &Pose::new(6.0, 10.0, 0.2),
        )
        .unwrap();
        for agg in [HeadAggregation::AbsSum, HeadAggregation::Head(1)] {
            let h = activation_map(&model(), &obs, agg).unwrap();
            assert!(h.values.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(h.max(), 1.0);
            assert!(!h.signed);
        }
    }
}
