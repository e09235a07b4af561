use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tensor, TensorData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HeatmapMethod {
    Activation,
    OcclusionRgb,
    OcclusionDepth,
    /// RGB patch followed by depth patch from the same sim region.
    OcclusionBoth,
    FeatureDist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Normalization {
    PerImage,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    Nearest,
    Bilinear,
}

/// Row-major scalar grid produced by an attribution method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub method: HeatmapMethod,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub signed: bool,
    pub normalization: Normalization,
}

impl Heatmap {
    pub fn new(method: HeatmapMethod, width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            width * height,
            "heatmap buffer does not match its size"
        );
        let signed = matches!(
            method,
            HeatmapMethod::OcclusionRgb
                | HeatmapMethod::OcclusionDepth
                | HeatmapMethod::OcclusionBoth
        );
        Self {
            method,
            width,
            height,
            values,
            signed,
            normalization: Normalization::None,
        }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Min-max rescale into `[0, 1]`; a constant map becomes all zeros.
    pub fn normalized(mut self) -> Self {
        let (lo, hi) = (self.min(), self.max());
        if hi > lo {
            self.values
                .iter_mut()
                .for_each(|v| *v = (*v - lo) / (hi - lo));
        } else {
            self.values.iter_mut().for_each(|v| *v = 0.0);
        }
        self.normalization = Normalization::PerImage;
        self
    }

    /// Resamples onto a `width × height` grid (pixel-center aligned).
    pub fn resample(&self, width: usize, height: usize, interp: Interp) -> Heatmap {
        let mut out = Vec::with_capacity(width * height);
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        for r in 0..height {
            for c in 0..width {
                let v = match interp {
                    Interp::Nearest => {
                        let x = (((c as f64 + 0.5) * sx) as usize).min(self.width - 1);
                        let y = (((r as f64 + 0.5) * sy) as usize).min(self.height - 1);
                        self.get(x, y)
                    }
                    Interp::Bilinear => {
                        let fx = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                        let fy = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
                        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
                        let (x1, y1) =
                            ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
                        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
                        let top = self.get(x0, y0) * (1.0 - tx) + self.get(x1, y0) * tx;
                        let bottom = self.get(x0, y1) * (1.0 - tx) + self.get(x1, y1) * tx;
                        top * (1.0 - ty) + bottom * ty
                    }
                };
                out.push(v);
            }
        }
        Heatmap {
            width,
            height,
            values: out,
            ..self.clone()
        }
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(
            self.width as u32,
            self.height as u32,
            1,
            TensorData::F64(self.values.clone()),
        )
        .expect("heatmap buffer matches its size")
    }

    pub fn from_tensor(t: &Tensor, method: HeatmapMethod) -> Result<Self> {
        if t.channels != 1 {
            return Err(Error::Format("heatmap tensors have one channel".into()));
        }
        let v = t
            .as_f64()
            .ok_or_else(|| Error::Format("heatmap tensor must be f64".into()))?;
        Ok(Heatmap::new(
            method,
            t.width as usize,
            t.height as usize,
            v.to_vec(),
        ))
    }
}
