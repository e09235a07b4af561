use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::camera::Pose;
use super::scene::Scene;
use crate::error::{Error, Result};

/// Default rejection budget: attempts allowed per requested pose, plus a
/// fixed floor.
pub fn default_budget(n: usize) -> usize {
    200 * n + 10_000
}

pub fn sample_poses(scene: &Scene, n: usize, min_dist: f64, seed: u64) -> Result<Vec<Pose>> {
    sample_poses_in(&[scene], n, min_dist, seed, default_budget(n))
}

/// Rejection-samples `n` poses that are free in every scene of `scenes` and
/// pairwise at least `min_dist` apart in `(x, y)`.
pub fn sample_poses_in(
    scenes: &[&Scene],
    n: usize,
    min_dist: f64,
    seed: u64,
    budget: usize,
) -> Result<Vec<Pose>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(min_dist >= 0.0) {
        return Err(Error::InvalidArgument(
            "min_dist must be non-negative".into(),
        ));
    }
    let first = scenes
        .first()
        .ok_or_else(|| Error::InvalidArgument("no scene given".into()))?;
    let [w, h] = first.extent;
    let cell = min_dist.max(1e-3);
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut poses: Vec<Pose> = Vec::with_capacity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..budget {
        if poses.len() == n {
            break;
        }
        let x = rng.random::<f64>() * w;
        let y = rng.random::<f64>() * h;
        let alpha = rng.random::<f64>() * TAU;
        if !scenes.iter().all(|s| s.is_free(x, y)) {
            continue;
        }
        let (kx, ky) = key(x, y);
        let crowded = min_dist > 0.0
            && (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    buckets.get(&(kx + dx, ky + dy)).is_some_and(|ids| {
                        ids.iter()
                            .any(|&i| (poses[i].x - x).hypot(poses[i].y - y) < min_dist)
                    })
                })
            });
        if crowded {
            continue;
        }
        buckets.entry((kx, ky)).or_default().push(poses.len());
        poses.push(Pose::new(x, y, alpha));
    }

    if poses.len() < n {
        return Err(Error::SamplingExhausted {
            placed: poses.len(),
            requested: n,
        });
    }
    Ok(poses)
}
