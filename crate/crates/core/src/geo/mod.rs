//! Bird's-eye back-projection of per-image evidence and its colorization.

pub mod color;
pub mod grid;
mod turbo_table;

pub use color::{
    colorize_grid, colorize_heatmap, depth_png, diverging, rgb_png, turbo, ColorImage,
};
pub use grid::{
    aggregate, aggregate_backprojections, backproject, default_downsample, pixel_to_world,
    pooled_samples, AggregationStrategy, Extent, GeoGrid, GridMetadata, GroundSample,
    DEFAULT_BLOCKS, MIN_BLOCKS,
};
pub use turbo_table::TURBO_SRGB;
