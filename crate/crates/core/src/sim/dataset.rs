use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::camera::{CameraSpec, Pose};
use super::observation::{Observation, World};
use super::perturb::{apply_all, Perturbation};
use super::render::render;
use super::sampling::{default_budget, sample_poses_in};
use super::scene::Scene;
use crate::error::{Error, Result};
use crate::par;
use crate::tensor::Tensor;

pub type InstanceId = u32;

pub const MANIFEST: &str = "manifest.json";
const ITEMS_DIR: &str = "items";

#[derive(Debug, Clone, PartialEq)]
pub struct PairedItem {
    pub id: InstanceId,
    pub pose: Pose,
    pub sim: Observation,
    pub real: Observation,
}

/// Sim/real observation pairs rendered at shared ground-truth poses.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub items: Vec<PairedItem>,
    pub scene_sim: Scene,
    pub scene_real: Scene,
    pub camera: CameraSpec,
    pub perturbations: Vec<Perturbation>,
    pub sampling_seed: u64,
    pub min_dist: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestItem {
    id: InstanceId,
    pose: Pose,
    sim: String,
    real: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema: u32,
    camera: CameraSpec,
    sampling_seed: u64,
    min_dist: f64,
    perturbations: Vec<Perturbation>,
    scene_sim: Scene,
    scene_real: Scene,
    items: Vec<ManifestItem>,
}

/// Renders `n` paired observations; the real scene is the left fold of
/// `perturbations` over `scene_sim`.
pub fn generate_paired_dataset(
    scene_sim: &Scene,
    perturbations: &[Perturbation],
    camera: &CameraSpec,
    n: usize,
    min_dist: f64,
    seed: u64,
) -> Result<PairedDataset> {
    camera.validate()?;
    scene_sim.validate()?;
    let scene_real = apply_all(scene_sim, perturbations)?;
    let poses = sample_poses_in(
        &[scene_sim, &scene_real],
        n,
        min_dist,
        seed,
        default_budget(n),
    )?;
    let indexed: Vec<(InstanceId, Pose)> = poses
        .into_iter()
        .enumerate()
        .map(|(i, p)| (i as u32, p))
        .collect();
    let items = par::try_map(&indexed, |(id, pose)| {
        let sim = render(scene_sim, camera, pose)?;
        let mut real = render(&scene_real, camera, pose)?;
        real.world = World::Real;
        Ok::<_, Error>(PairedItem {
            id: *id,
            pose: *pose,
            sim,
            real,
        })
    })?;
    Ok(PairedDataset {
        items,
        scene_sim: scene_sim.clone(),
        scene_real,
        camera: *camera,
        perturbations: perturbations.to_vec(),
        sampling_seed: seed,
        min_dist,
    })
}

fn item_path(id: InstanceId, world: World) -> String {
    let tag = match world {
        World::Sim => "sim",
        World::Real => "real",
    };
    format!("{ITEMS_DIR}/{id:06}_{tag}.gst")
}

impl PairedDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: InstanceId) -> Option<&PairedItem> {
        self.items
            .binary_search_by_key(&id, |it| it.id)
            .ok()
            .map(|i| &self.items[i])
    }

    pub fn ids(&self) -> Vec<InstanceId> {
        self.items.iter().map(|it| it.id).collect()
    }

    /// Copy restricted to the given ids (kept in id order).
    pub fn subset(&self, keep: impl Fn(InstanceId) -> bool) -> PairedDataset {
        PairedDataset {
            items: self
                .items
                .iter()
                .filter(|it| keep(it.id))
                .cloned()
                .collect(),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> PairedDataset {
        PairedDataset {
            items: Vec::new(),
            scene_sim: self.scene_sim.clone(),
            scene_real: self.scene_real.clone(),
            camera: self.camera,
            perturbations: self.perturbations.clone(),
            sampling_seed: self.sampling_seed,
            min_dist: self.min_dist,
        }
    }

    fn manifest(&self) -> Manifest {
        Manifest {
            schema: 1,
            camera: self.camera,
            sampling_seed: self.sampling_seed,
            min_dist: self.min_dist,
            perturbations: self.perturbations.clone(),
            scene_sim: self.scene_sim.clone(),
            scene_real: self.scene_real.clone(),
            items: self
                .items
                .iter()
                .map(|it| ManifestItem {
                    id: it.id,
                    pose: it.pose,
                    sim: item_path(it.id, World::Sim),
                    real: item_path(it.id, World::Real),
                })
                .collect(),
        }
    }

    /// Writes `manifest.json` plus one compressed tensor per observation.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join(ITEMS_DIR))?;
        let encoded = par::try_map(&self.items, |it| {
            Ok::<_, Error>((
                it.sim.to_tensor().to_compressed()?,
                it.real.to_tensor().to_compressed()?,
            ))
        })?;
        for (it, (sim, real)) in self.items.iter().zip(encoded) {
            std::fs::write(dir.join(item_path(it.id, World::Sim)), sim)?;
            std::fs::write(dir.join(item_path(it.id, World::Real)), real)?;
        }
        std::fs::write(
            dir.join(MANIFEST),
            serde_json::to_string_pretty(&self.manifest())?,
        )?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST))?)?;
        let camera = manifest.camera;
        let items = par::try_map(&manifest.items, |m| {
            let sim = Observation::from_tensor(
                &Tensor::load(dir.join(&m.sim))?,
                camera,
                Some(m.pose),
                World::Sim,
            )?;
            let real = Observation::from_tensor(
                &Tensor::load(dir.join(&m.real))?,
                camera,
                Some(m.pose),
                World::Real,
            )?;
            Ok::<_, Error>(PairedItem {
                id: m.id,
                pose: m.pose,
                sim,
                real,
            })
        })?;
        Ok(PairedDataset {
            items,
            scene_sim: manifest.scene_sim,
            scene_real: manifest.scene_real,
            camera,
            perturbations: manifest.perturbations,
            sampling_seed: manifest.sampling_seed,
            min_dist: manifest.min_dist,
        })
    }

    /// SHA-256 over the manifest and every raw observation tensor.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.manifest()).expect("manifest serializes"));
        for it in &self.items {
            h.update(it.sim.to_tensor().to_bytes());
            h.update(it.real.to_tensor().to_bytes());
        }
        hex(&h.finalize())
    }
}

/// SHA-256 over the files of a saved dataset directory.
pub fn dataset_dir_hash(dir: impl AsRef<Path>) -> Result<String> {
    let dir = dir.as_ref();
    let mut h = Sha256::new();
    h.update(std::fs::read(dir.join(MANIFEST))?);
    let mut files: Vec<_> = std::fs::read_dir(dir.join(ITEMS_DIR))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.sort();
    for f in files {
        h.update(f.file_name().unwrap_or_default().as_encoded_bytes());
        h.update(std::fs::read(&f)?);
    }
    Ok(hex(&h.finalize()))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::presets;

    #[test]
    fn empty_perturbations_give_identical_pairs() {
        let ds = generate_paired_dataset(
            &presets::default_scene(),
            &[],
            &CameraSpec::default(),
            12,
            0.3,
            5,
        )
        .unwrap();
        assert_eq!(ds.len(), 12);
        for it in &ds.items {
            assert_eq!(it.sim.rgb, it.real.rgb);
            assert_eq!(it.sim.depth, it.real.depth);
            assert_eq!(it.sim.pose_gt, it.real.pose_gt);
        }
    }

    #[test]
    fn save_load_roundtrip_and_stable_hash() {
        let cam = CameraSpec {
            width: 16,
            height: 16,
            ..CameraSpec::default()
        };
        let ps = [Perturbation::BrightnessShift { shift: -0.2 }];
        let ds = generate_paired_dataset(&presets::default_scene(), &ps, &cam, 6, 0.3, 11).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        ds.save(a.path()).unwrap();
        generate_paired_dataset(&presets::default_scene(), &ps, &cam, 6, 0.3, 11)
            .unwrap()
            .save(b.path())
            .unwrap();
        assert_eq!(
            dataset_dir_hash(a.path()).unwrap(),
            dataset_dir_hash(b.path()).unwrap()
        );
        let back = PairedDataset::load(a.path()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.content_hash(), ds.content_hash());
    }
}
