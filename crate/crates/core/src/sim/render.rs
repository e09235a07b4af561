//! Column raycaster producing RGB-D frames from a 2-D floor map.
//!
//! Column `c` casts a horizontal ray at `alpha + hfov·(0.5 − (c+0.5)/W)`.
//! Each surface it meets is a vertical slab from the floor up to the
//! surface height; its image rows follow from the perpendicular distance
//! so straight walls stay straight. Depth is the length of the horizontal
//! ray to the visible point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::camera::{normalize_angle, CameraSpec, Pose};
use super::observation::{Observation, World};
use super::scene::{Footprint, Rgb, Scene};
use crate::error::{Error, Result};
use crate::imaging;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    height: f64,
    color: Rgb,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Distance along the ray `origin + t·dir` to segment `a`–`b`, if hit.
pub fn ray_segment(origin: [f64; 2], dir: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<f64> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let denom = cross(dir, e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = [a[0] - origin[0], a[1] - origin[1]];
    let t = cross(ao, e) / denom;
    let s = cross(ao, dir) / denom;
    (t > EPS && (-EPS..=1.0 + EPS).contains(&s)).then_some(t)
}

fn ray_footprint(origin: [f64; 2], dir: [f64; 2], fp: &Footprint) -> Option<f64> {
    match fp {
        Footprint::Rect { min, max } => {
            let corners = [
                [min[0], min[1]],
                [max[0], min[1]],
                [max[0], max[1]],
                [min[0], max[1]],
            ];
            (0..4)
                .filter_map(|i| ray_segment(origin, dir, corners[i], corners[(i + 1) % 4]))
                .min_by(|a, b| a.total_cmp(b))
        }
        Footprint::Disc { center, radius } => {
            let oc = [origin[0] - center[0], origin[1] - center[1]];
            let b = dir[0] * oc[0] + dir[1] * oc[1];
            let c = oc[0] * oc[0] + oc[1] * oc[1] - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let t = -b - disc.sqrt();
            (t > EPS).then_some(t)
        }
    }
}

/// Nearest wall hit along a ray, `None` if the ray escapes the map.
pub fn cast_wall(scene: &Scene, origin: [f64; 2], theta: f64) -> Option<(f64, usize)> {
    let dir = [theta.cos(), theta.sin()];
    scene
        .walls
        .iter()
        .enumerate()
        .filter_map(|(i, w)| ray_segment(origin, dir, w.a, w.b).map(|t| (t, i)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

fn column_hits(scene: &Scene, origin: [f64; 2], theta: f64) -> Vec<Hit> {
    let dir = [theta.cos(), theta.sin()];
    let wall = cast_wall(scene, origin, theta);
    let limit = wall.map_or(f64::INFINITY, |(t, _)| t);
    let mut hits: Vec<Hit> = scene
        .objects
        .iter()
        .filter_map(|o| {
            ray_footprint(origin, dir, &o.footprint)
                .filter(|t| *t < limit)
                .map(|t| Hit {
                    t,
                    height: o.height_frac * scene.wall_height,
                    color: o.color,
                })
        })
        .collect();
    hits.sort_by(|a, b| a.t.total_cmp(&b.t));
    if let Some((t, i)) = wall {
        hits.push(Hit {
            t,
            height: scene.wall_height,
            color: scene.walls[i].color,
        });
    }
    hits
}

fn shade(base: Rgb, scene: &Scene, dist: f64, out: &mut [f32]) {
    let gain = scene.ambient_brightness * scene.brightness_gain / (1.0 + scene.falloff * dist);
    for k in 0..3 {
        out[k] = (base[k] as f64 * gain).clamp(0.0, 255.0) as f32;
    }
}

fn noise_seed(seed: u64, pose: &Pose) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for bits in [pose.x.to_bits(), pose.y.to_bits(), pose.alpha.to_bits()] {
        h ^= bits;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

/// Renders one RGB-D frame. Pure: identical inputs give bit-identical output.
pub fn render(scene: &Scene, camera: &CameraSpec, pose: &Pose) -> Result<Observation> {
    camera.validate()?;
    if !scene.is_free(pose.x, pose.y) {
        return Err(Error::PoseInSolid {
            x: pose.x,
            y: pose.y,
        });
    }
    let pose = Pose::new(pose.x, pose.y, pose.alpha);
    let (w, h) = (camera.width, camera.height);
    let f = camera.focal_px();
    let eye = camera.eye_height_frac * scene.wall_height;
    let above = scene.wall_height - eye;
    let origin = [pose.x, pose.y];
    let max_depth = camera.max_depth;

    let mut rgb = vec![0.0f32; w * h * 3];
    let mut depth = vec![0.0f32; w * h];

    for c in 0..w {
        let off = camera.column_offset(c as f64);
        let theta = normalize_angle(pose.alpha + off);
        let cos_off = off.cos();
        let hits = column_hits(scene, origin, theta);
        for r in 0..h {
            let y_img = (r as f64 + 0.5) - h as f64 / 2.0;
            let idx = r * w + c;
            let mut seen = None;
            for hit in &hits {
                let perp = hit.t * cos_off;
                let top = (eye - hit.height) * f / perp;
                let bottom = eye * f / perp;
                if y_img >= top && y_img <= bottom {
                    seen = Some((hit.t, hit.color));
                    break;
                }
            }
            let (dist, color) = match seen {
                Some(s) => s,
                None if y_img > 0.0 => (eye * f / y_img / cos_off, scene.floor_color),
                None => match hits.last() {
                    Some(_) => (above * f / (-y_img) / cos_off, scene.ceiling_color),
                    // ray escaped the map
                    None => (f64::INFINITY, scene.ceiling_color),
                },
            };
            shade(
                color,
                scene,
                if dist.is_finite() { dist } else { max_depth },
                &mut rgb[idx * 3..idx * 3 + 3],
            );
            depth[idx] = dist.min(max_depth) as f32;
        }
    }

    imaging::hue_rotate(&mut rgb, scene.hue_shift);

    if let Some(noise) = scene.depth_noise.filter(|n| n.stddev > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(noise.seed, &pose));
        let normal = Normal::new(0.0, noise.stddev).expect("finite stddev");
        for d in depth.iter_mut() {
            let v = *d as f64 + normal.sample(&mut rng);
            *d = v.clamp(0.0, max_depth) as f32;
        }
    }

    Ok(Observation {
        camera: *camera,
        rgb,
        depth,
        pose_gt: Some(pose),
        world: World::Sim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::presets;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    #[test]
    fn odd_width_center_column_hits_wall_exactly() {
        // box 10×10, camera at (8, 5) facing +x: wall at x = 10, 2 m away
        let scene = presets::box_room(10.0);
        let cam = CameraSpec {
            width: 65,
            ..CameraSpec::default()
        };
        let obs = render(&scene, &cam, &Pose::new(8.0, 5.0, 0.0)).unwrap();
        let row = cam.height / 2;
        assert_eq!(obs.depth_at(32, row), 2.0);
    }

    #[test]
    fn even_width_center_columns_match_closed_form() {
        let scene = presets::box_room(10.0);
        let cam = CameraSpec {
            hfov: FRAC_PI_2,
            width: 64,
            ..CameraSpec::default()
        };
        let obs = render(&scene, &cam, &Pose::new(8.0, 5.0, 0.0)).unwrap();
        // columns 31 and 32 are π/256 off-axis: distance 2 / cos(π/256)
        let expected = (2.0 / (PI / 256.0).cos()) as f32;
        assert_eq!(obs.depth_at(31, 32), expected);
        assert_eq!(obs.depth_at(32, 32), expected);
    }

    #[test]
    fn render_is_deterministic_and_angle_periodic() {
        let scene = presets::default_scene();
        let cam = CameraSpec::default();
        let p = Pose::new(2.0, 6.0, 1.0);
        let a = render(&scene, &cam, &p).unwrap();
        let b = render(&scene, &cam, &p).unwrap();
        assert_eq!(a, b);
        let c = render(
            &scene,
            &cam,
            &Pose {
                alpha: 1.0 + TAU,
                ..p
            },
        )
        .unwrap();
        assert_eq!(a.rgb, c.rgb);
        assert_eq!(a.depth, c.depth);
    }

    #[test]
    fn pose_in_solid_is_rejected() {
        let scene = presets::default_scene();
        let err = render(&scene, &CameraSpec::default(), &Pose::new(11.0, 11.0, 0.0)).unwrap_err();
        assert_eq!(err.code(), "POSE_IN_SOLID");
    }

    #[test]
    fn depth_never_exceeds_range() {
        let scene = presets::default_scene();
        let cam = CameraSpec::default();
        let obs = render(&scene, &cam, &Pose::new(2.0, 1.0, FRAC_PI_2)).unwrap();
        assert!(obs
            .depth
            .iter()
            .all(|d| *d >= 0.0 && (*d as f64) <= cam.max_depth));
        assert!(obs.rgb.iter().all(|v| (0.0..=255.0).contains(v)));
    }

    #[test]
    fn depth_noise_is_seeded() {
        let mut scene = presets::box_room(10.0);
        let cam = CameraSpec::default();
        let p = Pose::new(5.0, 5.0, 0.3);
        let clean = render(&scene, &cam, &p).unwrap();
        scene.depth_noise = Some(crate::sim::scene::DepthNoise {
            stddev: 0.05,
            seed: 3,
        });
        let a = render(&scene, &cam, &p).unwrap();
        let b = render(&scene, &cam, &p).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.depth, clean.depth);
        assert_eq!(a.rgb, clean.rgb);
    }
}
