use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::augment::{augment, AugmentRanges};
use super::loss::{loss, wrapped_distance_slope};
use super::network::{Architecture, Gradients, ModelParams, OUTPUTS};
use super::variant::VariantTag;
use crate::error::{Error, Result};
use crate::par;
use crate::sim::{Observation, PairedDataset, Pose};

/// One supervised example: an observation and its target pose.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub obs: &'a Observation,
    pub target: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Per-epoch multiplicative learning-rate decay.
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Global gradient-norm clip applied before the momentum update.
    pub clip_grad_norm: Option<f64>,
    pub augmentation: AugmentRanges,
    /// Depth noise (meters) injected per sample by the depth-noise variant.
    pub depth_noise_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.3,
            learning_rate: 0.01,
            momentum: 0.9,
            lr_decay: 0.98,
            epochs: 60,
            batch_size: 8,
            seed: 0,
            clip_grad_norm: Some(1.0),
            augmentation: AugmentRanges::default(),
            depth_noise_std: 0.05,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        if self.batch_size == 0
            || !(self.learning_rate >= 0.0)
            || !(0.0..1.0).contains(&self.momentum)
        {
            return Err(Error::InvalidArgument("invalid optimizer settings".into()));
        }
        self.augmentation.validate()
    }
}

/// `∂loss/∂outputs` for one prediction.
fn output_gradient(
    model: &ModelParams,
    out: &[f64; OUTPUTS],
    target: &Pose,
    gamma: f64,
) -> (f64, [f64; OUTPUTS]) {
    let pred = model.decode(out);
    let l = loss(&pred, target, gamma);
    let s = &model.arch.output_scale;
    let gx = 2.0 * (1.0 - gamma) * (pred.x - target.x) * s.half_extent[0];
    let gy = 2.0 * (1.0 - gamma) * (pred.y - target.y) * s.half_extent[1];
    let r2 = out[2] * out[2] + out[3] * out[3];
    let (gs, gc) = if r2 > 0.0 {
        let da = gamma * wrapped_distance_slope(pred.alpha, target.alpha);
        (da * out[3] / r2, -da * out[2] / r2)
    } else {
        (0.0, 0.0)
    };
    (l, [gx, gy, gs, gc])
}

/// Mean loss over `batch` and its exact gradient w.r.t. every weight.
pub fn loss_gradient(model: &ModelParams, batch: &[Sample<'_>]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let gamma = model.meta.gamma;
    let per_sample = par::try_map(batch, |s| {
        let t = model.trace(model.input_tensor(s.obs)?);
        let (l, d_out) = output_gradient(model, &t.outputs, &s.target, gamma);
        Ok::<_, Error>((l, model.backward(&t, &d_out)))
    })?;
    let mut total = 0.0;
    let mut grads = Gradients::zeros_like(model);
    for (l, g) in &per_sample {
        total += l;
        grads.add_assign(g);
    }
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

/// Mean loss over `samples` without gradients.
pub fn mean_loss(model: &ModelParams, samples: &[Sample<'_>]) -> Result<f64> {
    let ls = par::try_map(samples, |s| {
        let r = model.forward(s.obs)?;
        Ok::<_, Error>(loss(&r.pose_pred, &s.target, model.meta.gamma))
    })?;
    Ok(ls.iter().sum::<f64>() / ls.len().max(1) as f64)
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut h =
        seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h = (h ^ (h >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^ (h >> 33)
}

/// Per-sample input transform applied during an epoch.
#[derive(Debug, Clone, Copy)]
enum Randomization {
    None,
    Augment(AugmentRanges),
    DepthNoise(f64),
}

fn randomize(obs: &Observation, how: Randomization, seed: u64) -> Observation {
    match how {
        Randomization::None => obs.clone(),
        Randomization::Augment(r) => augment(obs, &r, seed),
        Randomization::DepthNoise(std) => {
            let mut out = obs.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, std).expect("finite stddev");
            let max = obs.camera.max_depth;
            for d in out.depth.iter_mut() {
                *d = (*d as f64 + normal.sample(&mut rng)).clamp(0.0, max) as f32;
            }
            out
        }
    }
}

/// Minibatch SGD with momentum over `samples`, starting from `model`.
fn fit(
    mut model: ModelParams,
    samples: &[Sample<'_>],
    cfg: &TrainConfig,
    how: Randomization,
) -> Result<ModelParams> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    model.meta.gamma = cfg.gamma;
    let mut velocity: Vec<Vec<f64>> = model.slices().iter().map(|s| vec![0.0; s.len()]).collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut lr = cfg.learning_rate;

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, epoch as u64, 0));
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch_idx in order.chunks(cfg.batch_size) {
            let owned: Vec<Observation> = match how {
                Randomization::None => Vec::new(),
                _ => batch_idx
                    .iter()
                    .map(|&i| {
                        randomize(
                            samples[i].obs,
                            how,
                            mix(cfg.seed, epoch as u64, i as u64 + 1),
                        )
                    })
                    .collect(),
            };
            let batch: Vec<Sample<'_>> = batch_idx
                .iter()
                .enumerate()
                .map(|(k, &i)| Sample {
                    obs: owned.get(k).unwrap_or(samples[i].obs),
                    target: samples[i].target,
                })
                .collect();
            let (l, mut g) = loss_gradient(&model, &batch)?;
            if !l.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            epoch_loss += l * batch.len() as f64;
            if let Some(clip) = cfg.clip_grad_norm {
                let norm = g.norm();
                if norm > clip {
                    g.scale(clip / norm);
                }
            }
            for ((p, v), gs) in model
                .slices_mut()
                .into_iter()
                .zip(velocity.iter_mut())
                .zip(g.slices())
            {
                for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(gs) {
                    *vi = cfg.momentum * *vi + gi;
                    *pi -= lr * *vi;
                }
            }
        }
        let epoch_loss = epoch_loss / samples.len() as f64;
        if !epoch_loss.is_finite() || !model.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        model.meta.loss_curve.push(epoch_loss);
        lr *= cfg.lr_decay;
    }
    Ok(model)
}

fn sim_samples(ds: &PairedDataset) -> Vec<Sample<'_>> {
    ds.items
        .iter()
        .map(|it| Sample {
            obs: &it.sim,
            target: it.pose,
        })
        .collect()
}

/// Trains a fresh desk-scale model on the simulated side of `ds`.
pub fn train(ds: &PairedDataset, cfg: &TrainConfig, variant: VariantTag) -> Result<ModelParams> {
    let arch = Architecture::desk(ds.camera.width, ds.camera.height, ds.scene_sim.extent);
    train_with(arch, ds, cfg, variant)
}

pub fn train_with(
    arch: Architecture,
    ds: &PairedDataset,
    cfg: &TrainConfig,
    variant: VariantTag,
) -> Result<ModelParams> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    let how = match variant {
        VariantTag::Vanilla => Randomization::None,
        VariantTag::DataAug => Randomization::Augment(cfg.augmentation),
        VariantTag::DepthNoise => Randomization::DepthNoise(cfg.depth_noise_std),
        VariantTag::FineTuned | VariantTag::Filtered(_) => {
            return Err(Error::InvalidArgument(format!(
                "variant {variant} is not trained from scratch"
            )))
        }
    };
    let model = ModelParams::init(arch, variant, cfg.seed, cfg.gamma, ds.camera.max_depth)?;
    fit(model, &sim_samples(ds), cfg, how)
}

/// Continues training `model` on the real observations of `real_subset`.
pub fn fine_tune(
    model: &ModelParams,
    real_subset: &PairedDataset,
    cfg: &TrainConfig,
) -> Result<ModelParams> {
    if real_subset.is_empty() {
        return Err(Error::InvalidArgument("fine-tuning subset is empty".into()));
    }
    let samples: Vec<Sample<'_>> = real_subset
        .items
        .iter()
        .map(|it| Sample {
            obs: &it.real,
            target: it.pose,
        })
        .collect();
    let mut start = model.clone();
    start.meta.variant = VariantTag::FineTuned;
    start.meta.seed = cfg.seed;
    fit(start, &samples, cfg, Randomization::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::network::{ConvSpec, OutputScale};
    use crate::sim::{generate_paired_dataset, presets, CameraSpec};

    fn small_ds() -> PairedDataset {
        let cam = CameraSpec {
            width: 16,
            height: 16,
            ..CameraSpec::default()
        };
        generate_paired_dataset(&presets::default_scene(), &[], &cam, 24, 0.3, 3).unwrap()
    }

    fn small_arch() -> Architecture {
        Architecture {
            input_width: 16,
            input_height: 16,
            convs: vec![
                ConvSpec {
                    out_channels: 4,
                    kernel: 3,
                    stride: 2,
                },
                ConvSpec {
                    out_channels: 8,
                    kernel: 3,
                    stride: 2,
                },
            ],
            output_scale: OutputScale::for_extent([22.0, 22.0]),
        }
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let ds = small_ds();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 1,
            ..TrainConfig::default()
        };
        let m = train_with(small_arch(), &ds, &cfg, VariantTag::Vanilla).unwrap();
        let init = ModelParams::init(small_arch(), VariantTag::Vanilla, cfg.seed, cfg.gamma, 10.0)
            .unwrap();
        assert_eq!(m.slices(), init.slices());
        assert_eq!(m.meta.loss_curve.len(), 1);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let ds = small_ds();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let a = train_with(small_arch(), &ds, &cfg, VariantTag::DataAug).unwrap();
        let b = train_with(small_arch(), &ds, &cfg, VariantTag::DataAug).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_epoch_fine_tune_is_identity() {
        let ds = small_ds();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let m = train_with(small_arch(), &ds, &cfg, VariantTag::Vanilla).unwrap();
        let ft = fine_tune(&m, &ds, &TrainConfig { epochs: 0, ..cfg }).unwrap();
        assert_eq!(ft.slices(), m.slices());
        assert_eq!(ft.meta.variant, VariantTag::FineTuned);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let m = ModelParams::init(small_arch(), VariantTag::Vanilla, 0, 0.3, 10.0).unwrap();
        assert!(loss_gradient(&m, &[]).is_err());
    }

    #[test]
    fn perfect_head_has_zero_head_gradient() {
        // zero FC weights and a bias that decodes exactly to the target
        let ds = small_ds();
        let mut m = ModelParams::init(small_arch(), VariantTag::Vanilla, 0, 0.3, 10.0).unwrap();
        m.fc_weight.fill(0.0);
        let target = Pose::new(11.0, 11.0, 0.0);
        m.fc_bias = ndarray::arr1(&[0.0, 0.0, 0.0, 1.0]);
        let batch: Vec<Sample<'_>> = ds
            .items
            .iter()
            .map(|it| Sample {
                obs: &it.sim,
                target,
            })
            .collect();
        let (l, g) = loss_gradient(&m, &batch).unwrap();
        assert_eq!(l, 0.0);
        assert!(g
            .fc_weight
            .iter()
            .chain(g.fc_bias.iter())
            .all(|v| v.abs() < 1e-15));
    }
}
