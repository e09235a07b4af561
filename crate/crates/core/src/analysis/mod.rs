//! Paired evaluation, attribution heatmaps, filters, projection and
//! selections.

pub mod activation;
pub mod attribution;
pub mod feature_distance;
pub mod filters;
pub mod heatmap;
pub mod histogram;
pub mod occlusion;
pub mod projection;
pub mod records;
pub mod selection;

pub use activation::{activation_map, activation_map_with, HeadAggregation};
pub use attribution::{attribute, attribute_image, geomap, Attribution};
pub use feature_distance::{feature_distance_map, feature_distance_with};
pub use filters::{apply_filters, evaluate_with_filter, FilterConfig};
pub use heatmap::{Heatmap, HeatmapMethod, Interp, Normalization};
pub use histogram::{orientation_histogram, room_histogram, PoseSource};
pub use occlusion::{occlusion_map, OcclusionChannel, PatchGrid};
pub use projection::{
    project_embeddings, project_embeddings_with, EmbeddingProjection, Pca, Projection, Projector,
};
pub use records::{evaluate, evaluate_mapped, summarize, PosePredictor, PredictionRecord, Summary};
pub use selection::{
    evaluate_selection, percentile_filter, select_complement, select_intersect, select_union,
    PercentileMode, RecordKey, SelectionContext, SelectionExpr, SelectionSet,
};
