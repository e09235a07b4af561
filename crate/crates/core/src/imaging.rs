//! Pixelwise imaging transforms shared by rendering, augmentation and the
//! input-configuration filters. RGB values live in `[0, 255]`; every
//! transform clamps back into that range and is an exact no-op at its
//! identity parameter.

#[inline]
fn clamp255(v: f64) -> f32 {
    v.clamp(0.0, 255.0) as f32
}

/// Rotates hue around the gray axis by `shift · π` radians.
pub fn hue_rotate(rgb: &mut [f32], shift: f64) {
    if shift == 0.0 {
        return;
    }
    let m = hue_matrix(shift * std::f64::consts::PI);
    for px in rgb.chunks_exact_mut(3) {
        let (r, g, b) = (px[0] as f64, px[1] as f64, px[2] as f64);
        px[0] = clamp255(m[0][0] * r + m[0][1] * g + m[0][2] * b);
        px[1] = clamp255(m[1][0] * r + m[1][1] * g + m[1][2] * b);
        px[2] = clamp255(m[2][0] * r + m[2][1] * g + m[2][2] * b);
    }
}

fn hue_matrix(theta: f64) -> [[f64; 3]; 3] {
    let (s, c) = theta.sin_cos();
    let k = (1.0 - c) / 3.0;
    let q = (1.0f64 / 3.0).sqrt() * s;
    [
        [c + k, k - q, k + q],
        [k + q, c + k, k - q],
        [k - q, k + q, c + k],
    ]
}

/// Warms (`t > 0`) or cools (`t < 0`) the image: red scales by `1 + t`,
/// blue by `1 − t`.
pub fn temperature(rgb: &mut [f32], t: f64) {
    if t == 0.0 {
        return;
    }
    for px in rgb.chunks_exact_mut(3) {
        px[0] = clamp255(px[0] as f64 * (1.0 + t));
        px[2] = clamp255(px[2] as f64 * (1.0 - t));
    }
}

pub fn brightness(rgb: &mut [f32], b: f64) {
    if b == 0.0 {
        return;
    }
    let gain = 1.0 + b;
    rgb.iter_mut().for_each(|v| *v = clamp255(*v as f64 * gain));
}

/// Contrast around mid-gray 128.
pub fn contrast(rgb: &mut [f32], c: f64) {
    if c == 0.0 {
        return;
    }
    let gain = 1.0 + c;
    rgb.iter_mut()
        .for_each(|v| *v = clamp255(128.0 + (*v as f64 - 128.0) * gain));
}

/// Remaps depth so that `[lo, hi]` (fractions of `max_depth`) spans the full
/// sensor range.
pub fn depth_range(depth: &mut [f32], max_depth: f64, lo: f64, hi: f64) {
    if lo == 0.0 && hi == 1.0 {
        return;
    }
    for d in depth.iter_mut() {
        let r = ((*d as f64 / max_depth - lo) / (hi - lo)).clamp(0.0, 1.0);
        *d = (r * max_depth) as f32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brightness_fifteen_percent() {
        let mut v = vec![100.0f32, 200.0, 250.0];
        brightness(&mut v, 0.15);
        assert_eq!(v[0], 115.0);
        assert_eq!(v[1], 230.0);
        assert_eq!(v[2], 255.0);
    }

    #[test]
    fn identities_are_exact() {
        let orig: Vec<f32> = (0..30).map(|i| i as f32 * 8.37).collect();
        let mut v = orig.clone();
        hue_rotate(&mut v, 0.0);
        temperature(&mut v, 0.0);
        brightness(&mut v, 0.0);
        contrast(&mut v, 0.0);
        assert_eq!(v, orig);
        let mut d = vec![0.5f32, 3.3, 10.0];
        depth_range(&mut d, 10.0, 0.0, 1.0);
        assert_eq!(d, vec![0.5, 3.3, 10.0]);
    }

    #[test]
    fn hue_full_turn_is_identity_and_gray_is_fixed() {
        let mut gray = vec![90.0f32; 3];
        hue_rotate(&mut gray, 0.37);
        assert!(gray.iter().all(|v| (v - 90.0).abs() < 1e-3));
        let mut v = vec![200.0f32, 40.0, 90.0];
        hue_rotate(&mut v, 1.0);
        hue_rotate(&mut v, 1.0);
        assert!((v[0] - 200.0).abs() < 1e-2 && (v[1] - 40.0).abs() < 1e-2);
    }

    #[test]
    fn contrast_pivots_on_mid_gray() {
        let mut v = vec![128.0f32, 138.0, 118.0];
        contrast(&mut v, 1.0);
        assert_eq!(v, vec![128.0, 148.0, 108.0]);
    }

    #[test]
    fn depth_range_clamps() {
        let mut d = vec![10.0f32, 2.5, 0.0];
        depth_range(&mut d, 10.0, 0.0, 0.5);
        assert_eq!(d, vec![10.0, 5.0, 0.0]);
    }

    #[test]
    fn temperature_warms() {
        let mut v = vec![100.0f32, 100.0, 100.0];
        temperature(&mut v, 0.5);
        assert_eq!(v, vec![150.0, 100.0, 50.0]);
    }
}
