//! Convolutional pose regressor: a stack of ReLU convolutions, global
//! average pooling and one fully-connected layer producing
//! `(x, y, sin α, cos α)`.

use ndarray::{linalg::general_mat_mul, Array1, Array2, Array3, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::variant::VariantTag;
use crate::error::{Error, Result};
use crate::sim::{normalize_angle, Observation, Pose};

pub const INPUT_CHANNELS: usize = 4;
pub const OUTPUTS: usize = 4;
/// Subtracted from the unit-scaled inputs; mid-gray at half range is zero.
pub const INPUT_OFFSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Affine map from the two position outputs to world meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputScale {
    pub center: [f64; 2],
    pub half_extent: [f64; 2],
}

impl OutputScale {
    pub fn for_extent(extent: [f64; 2]) -> Self {
        Self {
            center: [extent[0] / 2.0, extent[1] / 2.0],
            half_extent: [extent[0] / 2.0, extent[1] / 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_width: usize,
    pub input_height: usize,
    pub convs: Vec<ConvSpec>,
    pub output_scale: OutputScale,
}

impl Architecture {
    /// 4 stride-2 3×3 convolutions with 16/32/64/96 channels.
    pub fn desk(width: usize, height: usize, extent: [f64; 2]) -> Self {
        let conv = |c| ConvSpec {
            out_channels: c,
            kernel: 3,
            stride: 2,
        };
        Self {
            input_width: width,
            input_height: height,
            convs: vec![conv(16), conv(32), conv(64), conv(96)],
            output_scale: OutputScale::for_extent(extent),
        }
    }

    /// Spatial size after each convolution, starting with the input.
    pub fn spatial_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![(self.input_height, self.input_width)];
        for c in &self.convs {
            let (h, w) = *dims.last().unwrap();
            let pad = c.kernel / 2;
            let out = |n: usize| (n + 2 * pad).saturating_sub(c.kernel) / c.stride + 1;
            dims.push((out(h), out(w)));
        }
        dims
    }

    pub fn embedding_width(&self) -> usize {
        self.convs.last().map_or(INPUT_CHANNELS, |c| c.out_channels)
    }

    pub fn validate(&self) -> Result<()> {
        if self.convs.is_empty() {
            return Err(Error::InvalidArgument(
                "architecture needs at least one convolution".into(),
            ));
        }
        if self
            .convs
            .iter()
            .any(|c| c.kernel == 0 || c.kernel % 2 == 0 || c.stride == 0 || c.out_channels == 0)
        {
            return Err(Error::InvalidArgument(
                "convolutions need odd kernels and positive strides".into(),
            ));
        }
        if self.spatial_dims().iter().any(|&(h, w)| h == 0 || w == 0) {
            return Err(Error::InvalidArgument(
                "layer shapes collapse to zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub spec: ConvSpec,
    pub in_channels: usize,
    /// `(out, in·k·k)`, rows ordered `(in, ky, kx)`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ConvLayer {
    pub fn pad(&self) -> usize {
        self.spec.kernel / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub variant: VariantTag,
    pub seed: u64,
    pub gamma: f64,
    pub max_depth: f64,
    #[serde(default)]
    pub loss_curve: Vec<f64>,
}

/// All weights of a pose regressor plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub convs: Vec<ConvLayer>,
    /// `(4, E)` fully-connected weights.
    pub fc_weight: Array2<f64>,
    pub fc_bias: Array1<f64>,
    pub meta: ModelMeta,
}

/// Gradient buffers shaped like [`ModelParams`]' trainable arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv_weight: Vec<Array2<f64>>,
    pub conv_bias: Vec<Array1<f64>>,
    pub fc_weight: Array2<f64>,
    pub fc_bias: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(m: &ModelParams) -> Self {
        Self {
            conv_weight: m
                .convs
                .iter()
                .map(|c| Array2::zeros(c.weight.raw_dim()))
                .collect(),
            conv_bias: m
                .convs
                .iter()
                .map(|c| Array1::zeros(c.bias.raw_dim()))
                .collect(),
            fc_weight: Array2::zeros(m.fc_weight.raw_dim()),
            fc_bias: Array1::zeros(OUTPUTS),
        }
    }

    /// Flat slices in declaration order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (w, b) in self.conv_weight.iter().zip(&self.conv_bias) {
            out.push(w.as_slice().unwrap());
            out.push(b.as_slice().unwrap());
        }
        out.push(self.fc_weight.as_slice().unwrap());
        out.push(self.fc_bias.as_slice().unwrap());
        out
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.conv_weight.iter_mut().zip(&other.conv_weight) {
            *a += b;
        }
        for (a, b) in self.conv_bias.iter_mut().zip(&other.conv_bias) {
            *a += b;
        }
        self.fc_weight += &other.fc_weight;
        self.fc_bias += &other.fc_bias;
    }

    pub fn scale(&mut self, s: f64) {
        self.conv_weight.iter_mut().for_each(|a| *a *= s);
        self.conv_bias.iter_mut().for_each(|a| *a *= s);
        self.fc_weight *= s;
        self.fc_bias *= s;
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    pub pose_pred: Pose,
    /// Last convolution's activations, `(C, h, w)`.
    pub feature_map: Array3<f64>,
    /// Globally pooled features fed to the fully-connected layer.
    pub embedding: Vec<f64>,
    /// Raw head outputs `(x, y, sin α, cos α)` before decoding.
    pub outputs: [f64; OUTPUTS],
}

/// Intermediate buffers of a forward pass kept for backpropagation.
pub(crate) struct Trace {
    cols: Vec<Array2<f64>>,
    /// Post-ReLU activations per layer, `(C, h·w)`.
    acts: Vec<Array2<f64>>,
    embedding: Array1<f64>,
    pub(crate) outputs: [f64; OUTPUTS],
}

/// Image-to-columns for a `(C, H, W)` input flattened as `(C, H·W)`.
fn im2col(
    x: ArrayView2<f64>,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) -> Array2<f64> {
    let c_in = x.nrows();
    let mut cols = Array2::<f64>::zeros((c_in * k * k, oh * ow));
    let xs = x.as_slice().expect("standard layout");
    let cs = cols.as_slice_mut().unwrap();
    for c in 0..c_in {
        let plane = &xs[c * h * w..(c + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let dst = &mut cs[row * oh * ow..(row + 1) * oh * ow];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    let drow = &mut dst[oy * ow..(oy + 1) * ow];
                    for (ox, d) in drow.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            *d = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
fn col2im(
    cols: &Array2<f64>,
    c_in: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) -> Array2<f64> {
    let mut x = Array2::<f64>::zeros((c_in, h * w));
    let xs = x.as_slice_mut().unwrap();
    let cs = cols.as_slice().expect("standard layout");
    for c in 0..c_in {
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let src = &cs[row * oh * ow..(row + 1) * oh * ow];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let base = c * h * w + iy as usize * w;
                    for ox in 0..ow {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            xs[base + ix as usize] += src[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
    x
}

impl ModelParams {
    /// He-initialized convolutions, small Gaussian head, zero biases.
    pub fn init(
        arch: Architecture,
        variant: VariantTag,
        seed: u64,
        gamma: f64,
        max_depth: f64,
    ) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut in_ch = INPUT_CHANNELS;
        let mut convs = Vec::with_capacity(arch.convs.len());
        for spec in &arch.convs {
            let fan_in = in_ch * spec.kernel * spec.kernel;
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            let weight = Array2::from_shape_simple_fn((spec.out_channels, fan_in), || {
                normal.sample(&mut rng)
            });
            convs.push(ConvLayer {
                spec: *spec,
                in_channels: in_ch,
                weight,
                bias: Array1::zeros(spec.out_channels),
            });
            in_ch = spec.out_channels;
        }
        let e = arch.embedding_width();
        let normal = Normal::new(0.0, (1.0 / e as f64).sqrt()).unwrap();
        let fc_weight = Array2::from_shape_simple_fn((OUTPUTS, e), || normal.sample(&mut rng));
        Ok(Self {
            arch,
            convs,
            fc_weight,
            fc_bias: Array1::zeros(OUTPUTS),
            meta: ModelMeta {
                variant,
                seed,
                gamma,
                max_depth,
                loss_curve: Vec::new(),
            },
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.convs
            .iter()
            .map(|c| c.weight.len() + c.bias.len())
            .sum::<usize>()
            + self.fc_weight.len()
            + OUTPUTS
    }

    /// Flat parameter slices in declaration order (conv weight, conv bias, …,
    /// fc weight, fc bias).
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for c in &self.convs {
            out.push(c.weight.as_slice().unwrap());
            out.push(c.bias.as_slice().unwrap());
        }
        out.push(self.fc_weight.as_slice().unwrap());
        out.push(self.fc_bias.as_slice().unwrap());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for c in &mut self.convs {
            out.push(c.weight.as_slice_mut().unwrap());
            out.push(c.bias.as_slice_mut().unwrap());
        }
        out.push(self.fc_weight.as_slice_mut().unwrap());
        out.push(self.fc_bias.as_slice_mut().unwrap());
        out
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn check_input(&self, obs: &Observation) -> Result<()> {
        if obs.width() != self.arch.input_width || obs.height() != self.arch.input_height {
            return Err(Error::InputShapeMismatch {
                expected: format!("{}x{}x4", self.arch.input_width, self.arch.input_height),
                got: format!("{}x{}x4", obs.width(), obs.height()),
            });
        }
        Ok(())
    }

    /// Channel-first network input: RGB scaled to `[0, 1]` and depth
    /// divided by the sensor range, both shifted by `-INPUT_OFFSET`.
    pub fn input_tensor(&self, obs: &Observation) -> Result<Array2<f64>> {
        self.check_input(obs)?;
        let n = obs.pixel_count();
        let mut x = Array2::<f64>::zeros((INPUT_CHANNELS, n));
        let xs = x.as_slice_mut().unwrap();
        for i in 0..n {
            for c in 0..3 {
                xs[c * n + i] = obs.rgb[i * 3 + c] as f64 / 255.0 - INPUT_OFFSET;
            }
            xs[3 * n + i] = obs.depth[i] as f64 / obs.camera.max_depth - INPUT_OFFSET;
        }
        Ok(x)
    }

    pub(crate) fn trace(&self, input: Array2<f64>) -> Trace {
        let dims = self.arch.spatial_dims();
        let mut cols = Vec::with_capacity(self.convs.len());
        let mut acts = Vec::with_capacity(self.convs.len());
        let mut x = input;
        for (l, layer) in self.convs.iter().enumerate() {
            let (h, w) = dims[l];
            let (oh, ow) = dims[l + 1];
            let col = im2col(
                x.view(),
                h,
                w,
                layer.spec.kernel,
                layer.spec.stride,
                layer.pad(),
                oh,
                ow,
            );
            let mut z = Array2::<f64>::zeros((layer.spec.out_channels, oh * ow));
            general_mat_mul(1.0, &layer.weight, &col, 0.0, &mut z);
            for (mut row, b) in z.axis_iter_mut(Axis(0)).zip(layer.bias.iter()) {
                row.mapv_inplace(|v| (v + b).max(0.0));
            }
            cols.push(col);
            acts.push(z.clone());
            x = z;
        }
        let embedding = x.mean_axis(Axis(1)).expect("non-empty feature map");
        let out = self.fc_weight.dot(&embedding) + &self.fc_bias;
        Trace {
            cols,
            acts,
            embedding,
            outputs: [out[0], out[1], out[2], out[3]],
        }
    }

    pub fn decode(&self, o: &[f64; OUTPUTS]) -> Pose {
        let s = &self.arch.output_scale;
        Pose::new(
            s.center[0] + s.half_extent[0] * o[0],
            s.center[1] + s.half_extent[1] * o[1],
            normalize_angle(o[2].atan2(o[3])),
        )
    }

    pub fn forward(&self, obs: &Observation) -> Result<ForwardResult> {
        let input = self.input_tensor(obs)?;
        Ok(self.forward_input(input))
    }

    pub(crate) fn forward_input(&self, input: Array2<f64>) -> ForwardResult {
        let t = self.trace(input);
        let (h, w) = *self.arch.spatial_dims().last().unwrap();
        let last = t.acts.last().unwrap();
        let feature_map = last
            .clone()
            .into_shape_with_order((last.nrows(), h, w))
            .expect("feature map shape");
        ForwardResult {
            pose_pred: self.decode(&t.outputs),
            feature_map,
            embedding: t.embedding.to_vec(),
            outputs: t.outputs,
        }
    }

    /// Backpropagates `d_out = ∂L/∂outputs` through a stored trace.
    pub(crate) fn backward(&self, t: &Trace, d_out: &[f64; OUTPUTS]) -> Gradients {
        let dims = self.arch.spatial_dims();
        let d_out = Array1::from(d_out.to_vec());
        let mut g = Gradients::zeros_like(self);
        g.fc_weight = d_out
            .view()
            .insert_axis(Axis(1))
            .dot(&t.embedding.view().insert_axis(Axis(0)));
        g.fc_bias = d_out.clone();
        let d_embed = self.fc_weight.t().dot(&d_out);

        let last = t.acts.last().unwrap();
        let p = last.ncols() as f64;
        let mut d_act = Array2::<f64>::zeros(last.raw_dim());
        for (mut row, de) in d_act.axis_iter_mut(Axis(0)).zip(d_embed.iter()) {
            row.fill(de / p);
        }

        for l in (0..self.convs.len()).rev() {
            let layer = &self.convs[l];
            // ReLU mask
            let mut dz = d_act;
            dz.zip_mut_with(&t.acts[l], |d, a| {
                if *a <= 0.0 {
                    *d = 0.0;
                }
            });
            general_mat_mul(1.0, &dz, &t.cols[l].t(), 0.0, &mut g.conv_weight[l]);
            g.conv_bias[l] = dz.sum_axis(Axis(1));
            if l == 0 {
                break;
            }
            let d_cols = layer.weight.t().dot(&dz);
            let (h, w) = dims[l];
            let (oh, ow) = dims[l + 1];
            d_act = col2im(
                &d_cols,
                layer.in_channels,
                h,
                w,
                layer.spec.kernel,
                layer.spec.stride,
                layer.pad(),
                oh,
                ow,
            );
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{CameraSpec, Observation};

    fn tiny() -> ModelParams {
        let arch = Architecture {
            input_width: 16,
            input_height: 16,
            convs: vec![
                ConvSpec {
                    out_channels: 4,
                    kernel: 3,
                    stride: 2,
                },
                ConvSpec {
                    out_channels: 6,
                    kernel: 3,
                    stride: 2,
                },
            ],
            output_scale: OutputScale::for_extent([10.0, 10.0]),
        };
        ModelParams::init(arch, VariantTag::Vanilla, 1, 0.3, 10.0).unwrap()
    }

    #[test]
    fn desk_architecture_shapes_chain() {
        let arch = Architecture::desk(64, 64, [22.0, 22.0]);
        assert_eq!(
            arch.spatial_dims(),
            vec![(64, 64), (32, 32), (16, 16), (8, 8), (4, 4)]
        );
        let m = ModelParams::init(arch, VariantTag::Vanilla, 0, 0.3, 10.0).unwrap();
        assert_eq!(m.fc_weight.dim(), (4, 96));
        assert_eq!(m.parameter_count(), 592 + 4640 + 18496 + 55392 + 388);
    }

    #[test]
    fn fresh_model_gives_finite_normalized_pose() {
        let m = tiny();
        let cam = CameraSpec {
            width: 16,
            height: 16,
            ..CameraSpec::default()
        };
        let mut obs = Observation::blank(cam);
        obs.rgb
            .iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = (i % 255) as f32);
        let r = m.forward(&obs).unwrap();
        assert!(r.pose_pred.x.is_finite() && r.pose_pred.y.is_finite());
        assert!((0.0..std::f64::consts::TAU).contains(&r.pose_pred.alpha));
        assert_eq!(r.feature_map.dim(), (6, 4, 4));
        assert_eq!(r.embedding.len(), 6);
        assert_eq!(r, m.forward(&obs).unwrap());
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let m = tiny();
        let obs = Observation::blank(CameraSpec::default());
        assert_eq!(m.forward(&obs).unwrap_err().code(), "INPUT_SHAPE_MISMATCH");
    }

    #[test]
    fn zero_input_with_zero_bias_gives_zero_features() {
        let m = tiny();
        let obs = Observation::mid_gray(CameraSpec {
            width: 16,
            height: 16,
            ..CameraSpec::default()
        });
        assert!(m.input_tensor(&obs).unwrap().iter().all(|v| *v == 0.0));
        let r = m.forward(&obs).unwrap();
        assert!(r.feature_map.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)>
        let (c, h, w, k, s, pad) = (2, 7, 5, 3, 2, 1);
        let oh = (h + 2 * pad - k) / s + 1;
        let ow = (w + 2 * pad - k) / s + 1;
        let x = Array2::from_shape_fn((c, h * w), |(i, j)| ((i * 31 + j * 7) % 13) as f64 - 6.0);
        let y = Array2::from_shape_fn((c * k * k, oh * ow), |(i, j)| {
            ((i * 17 + j * 3) % 11) as f64 - 5.0
        });
        let lhs = (&im2col(x.view(), h, w, k, s, pad, oh, ow) * &y).sum();
        let rhs = (&x * &col2im(&y, c, h, w, k, s, pad, oh, ow)).sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn backward_is_linear_in_output_gradient() {
        let m = tiny();
        let cam = CameraSpec {
            width: 16,
            height: 16,
            ..CameraSpec::default()
        };
        let mut obs = Observation::blank(cam);
        obs.rgb
            .iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = ((i * 37) % 255) as f32);
        obs.depth
            .iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = (i % 10) as f32);
        let t = m.trace(m.input_tensor(&obs).unwrap());
        let d = [0.3, -1.2, 0.7, 0.05];
        let mut g1 = m.backward(&t, &d);
        let g2 = m.backward(&t, &d.map(|v| v * 4.0));
        g1.scale(4.0);
        assert_eq!(g1, g2);
    }
}
