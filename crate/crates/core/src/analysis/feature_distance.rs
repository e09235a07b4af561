//! Sim/real feature-map distance: cosine distance times L1 per spatial cell
//! of the last convolution layer.

use ndarray::Array3;

use super::heatmap::{Heatmap, HeatmapMethod, Normalization};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::Observation;

pub const COSINE_EPS: f64 = 1e-8;

/// Raw per-cell scores for two `C × h × w` feature maps, row-major `h × w`.
pub fn cell_scores(fs: &Array3<f64>, fr: &Array3<f64>) -> Result<Vec<f64>> {
    if fs.dim() != fr.dim() {
        return Err(Error::PairMismatch(format!(
            "feature maps {:?} vs {:?}",
            fs.dim(),
            fr.dim()
        )));
    }
    let (ch, h, w) = fs.dim();
    let mut out = Vec::with_capacity(h * w);
    for v in 0..h {
        for u in 0..w {
            let (mut dot, mut ns, mut nr, mut l1) = (0.0, 0.0, 0.0, 0.0);
            for c in 0..ch {
                let (a, b) = (fs[[c, v, u]], fr[[c, v, u]]);
                dot += a * b;
                ns += a * a;
                nr += b * b;
                l1 += (a - b).abs();
            }
            let cos_d = (1.0 - dot / (ns.sqrt() * nr.sqrt() + COSINE_EPS)).max(0.0);
            out.push(cos_d * l1);
        }
    }
    Ok(out)
}

/// Feature-space grid at the last conv resolution, min-max normalized.
/// Use [`Heatmap::resample`] for display at image size.
pub fn feature_distance_map(
    model: &ModelParams,
    sim: &Observation,
    real: &Observation,
) -> Result<Heatmap> {
    feature_distance_with(model, sim, real, Normalization::PerImage)
}

/// As [`feature_distance_map`]; `Normalization::None` keeps raw scores so
/// instances can be compared, e.g. before dataset-wide aggregation.
pub fn feature_distance_with(
    model: &ModelParams,
    sim: &Observation,
    real: &Observation,
    norm: Normalization,
) -> Result<Heatmap> {
    if !sim.same_shape(real) {
        return Err(Error::PairMismatch("observations differ in shape".into()));
    }
    let fs = model.forward(sim)?.feature_map;
    let fr = model.forward(real)?.feature_map;
    let (_, h, w) = fs.dim();
    let raw = Heatmap::new(HeatmapMethod::FeatureDist, w, h, cell_scores(&fs, &fr)?);
    Ok(match norm {
        Normalization::PerImage => raw.normalized(),
        Normalization::None => raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Architecture, VariantTag};
    use crate::sim::{presets, render, CameraSpec, Pose};

    fn planted() -> Array3<f64> {
        Array3::from_shape_fn((3, 2, 2), |(c, v, u)| {
            1.0 + c as f64 + 0.5 * v as f64 - 0.25 * u as f64
        })
    }

    #[test]
    fn scaled_column_scores_zero() {
        let fs = planted();
        let mut fr = fs.clone();
        for c in 0..3 {
            fr[[c, 1, 0]] *= 2.0;
        }
        fr[[0, 0, 1]] += 3.0;
        let s = cell_scores(&fs, &fr).unwrap();
        let l1: f64 = (0..3).map(|c| (fs[[c, 1, 0]] - fr[[c, 1, 0]]).abs()).sum();
        assert!(l1 > 0.0);
        assert!(s[2] < 1e-8, "scaled cell scored {}", s[2]);
        assert!(s[1] > 1e-3);
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn dead_features_do_not_divide_by_zero() {
        let z = Array3::zeros((2, 1, 1));
        let mut r = z.clone();
        r[[0, 0, 0]] = 1.0;
        let s = cell_scores(&z, &r).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_pair_is_zero() {
        let m = ModelParams::init(
            Architecture::desk(64, 64, [22.0, 22.0]),
            VariantTag::Vanilla,
            1,
            0.3,
            10.0,
        )
        .unwrap();
        let o = render(
            &presets::default_scene(),
            &CameraSpec::default(),
            &Pose::new(3.0, 5.0, 1.0),
        )
        .unwrap();
        let h = feature_distance_map(&m, &o, &o).unwrap();
        assert_eq!((h.width, h.height), (4, 4));
        assert!(h.values.iter().all(|v| *v == 0.0));
    }
}
