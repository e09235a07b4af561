//! Turbo and diverging colorization plus PNG encoding.

use std::io::Cursor;

use image::{ImageBuffer, ImageFormat, Rgb, Rgba};
use serde::{Deserialize, Serialize};

use super::grid::GeoGrid;
use super::turbo_table::TURBO_SRGB;
use crate::analysis::Heatmap;
use crate::error::Result;
use crate::sim::Observation;

/// Anchors of the negative and positive arms of the diverging scale.
const BLUE: [f64; 3] = [33.0, 102.0, 172.0];
const RED: [f64; 3] = [178.0, 24.0, 43.0];

fn to_u8(c: f64) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Turbo color of `v ∈ [0, 1]` with linear interpolation between the 256
/// table entries. Returns the color and whether `v` had to be clamped.
pub fn turbo(v: f64) -> ([u8; 3], bool) {
    let clamped = !(0.0..=1.0).contains(&v);
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let mut p = v * 255.0;
    if (p - p.round()).abs() < 1e-9 {
        p = p.round();
    }
    let i = (p.floor() as usize).min(254);
    let t = p - i as f64;
    let (a, b) = (TURBO_SRGB[i], TURBO_SRGB[i + 1]);
    let c = [0, 1, 2].map(|k| to_u8(a[k] + (b[k] - a[k]) * t));
    (c, clamped)
}

/// Blue for negative, white at zero, red for positive; `v ∈ [-1, 1]`.
pub fn diverging(v: f64) -> ([u8; 3], bool) {
    let clamped = !(-1.0..=1.0).contains(&v);
    let v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    let end = if v < 0.0 { BLUE } else { RED };
    let t = v.abs();
    let c = [0, 1, 2].map(|k| (255.0 + (end[k] - 255.0) * t).round() as u8);
    (c, clamped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    /// Row-major RGBA, top row first.
    pub rgba: Vec<u8>,
    /// Some input value fell outside the colormap's domain.
    pub clamped: bool,
}

impl ColorImage {
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let img: ImageBuffer<Rgba<u8>, _> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, self.rgba.clone())
                .expect("buffer sized");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }
}

/// Turbo overlay of a grid; world y grows upward so the last block row is
/// drawn first. Zero-support blocks are transparent.
pub fn colorize_grid(grid: &GeoGrid) -> ColorImage {
    let b = grid.blocks;
    let mut rgba = Vec::with_capacity(b * b * 4);
    let mut clamped = false;
    for row in (0..b).rev() {
        for col in 0..b {
            let k = row * b + col;
            let (c, cl) = turbo(grid.values[k]);
            clamped |= cl;
            let alpha = if grid.counts[k] > 0 { 255 } else { 0 };
            rgba.extend_from_slice(&[c[0], c[1], c[2], alpha]);
        }
    }
    ColorImage {
        width: b,
        height: b,
        rgba,
        clamped,
    }
}

/// Turbo for unsigned maps; the diverging scale scaled by the largest
/// magnitude for signed (occlusion) maps.
pub fn colorize_heatmap(h: &Heatmap) -> ColorImage {
    let scale = h.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rgba = Vec::with_capacity(h.values.len() * 4);
    let mut clamped = false;
    for &v in &h.values {
        let (c, cl) = if h.signed {
            diverging(if scale > 0.0 { v / scale } else { 0.0 })
        } else {
            turbo(v)
        };
        clamped |= cl;
        rgba.extend_from_slice(&[c[0], c[1], c[2], 255]);
    }
    ColorImage {
        width: h.width,
        height: h.height,
        rgba,
        clamped,
    }
}

fn encode_rgb(width: usize, height: usize, data: Vec<u8>) -> Result<Vec<u8>> {
    let img: ImageBuffer<Rgb<u8>, _> =
        ImageBuffer::from_raw(width as u32, height as u32, data).expect("buffer sized");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn rgb_png(obs: &Observation) -> Result<Vec<u8>> {
    let data = obs
        .rgb
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    encode_rgb(obs.width(), obs.height(), data)
}

/// Depth as turbo, near = 0.
pub fn depth_png(obs: &Observation) -> Result<Vec<u8>> {
    let max = obs.camera.max_depth;
    let data = obs
        .depth
        .iter()
        .flat_map(|d| turbo(*d as f64 / max).0)
        .collect();
    encode_rgb(obs.width(), obs.height(), data)
}
