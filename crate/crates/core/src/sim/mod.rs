//! Paired sim/real RGB-D environment.

pub mod camera;
pub mod dataset;
pub mod observation;
pub mod perturb;
pub mod presets;
pub mod render;
pub mod sampling;
pub mod scene;

pub use camera::{angular_distance, normalize_angle, CameraSpec, Pose};
pub use dataset::{generate_paired_dataset, InstanceId, PairedDataset, PairedItem};
pub use observation::{Observation, World};
pub use perturb::{apply_all, apply_perturbation, Perturbation};
pub use render::render;
pub use sampling::sample_poses;
pub use scene::{Footprint, Object, Room, Scene, Wall};
