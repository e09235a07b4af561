//! Uniform entry point over the three attribution methods, used by the
//! geo-map and the service layer.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::activation::{activation_map_with, HeadAggregation};
use super::feature_distance::feature_distance_with;
use super::heatmap::{Heatmap, Interp, Normalization};
use super::occlusion::{occlusion_map, OcclusionChannel, PatchGrid};
use crate::error::{Error, Result};
use crate::geo::{aggregate_backprojections, default_downsample, AggregationStrategy, GeoGrid};
use crate::model::ModelParams;
use crate::par;
use crate::sim::{InstanceId, Observation, PairedDataset, PairedItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Attribution {
    Activation,
    Occlusion { channel: OcclusionChannel },
    FeatureDistance,
}

impl Attribution {
    /// Parses `activation`, `feature_distance` / `feature_dist`, and
    /// `occlusion` with an optional channel (default RGB).
    pub fn parse(method: &str, channel: Option<&str>) -> Result<Self> {
        let channel = match channel.map(str::to_ascii_lowercase).as_deref() {
            None | Some("rgb") => OcclusionChannel::Rgb,
            Some("depth") => OcclusionChannel::Depth,
            Some("both") => OcclusionChannel::Both,
            Some(other) => {
                return Err(Error::InvalidArgument(format!(
                    "unknown occlusion channel `{other}`"
                )))
            }
        };
        match method.to_ascii_lowercase().as_str() {
            "activation" => Ok(Self::Activation),
            "occlusion" => Ok(Self::Occlusion { channel }),
            "feature_distance" | "feature_dist" | "featuredist" => Ok(Self::FeatureDistance),
            other => Err(Error::InvalidArgument(format!(
                "unknown attribution method `{other}`"
            ))),
        }
    }

    /// The observation whose depth places this method's evidence on the
    /// floor plan: the real frame for activation maps, the sim frame for the
    /// paired methods (sim-only content is where their signal comes from).
    pub fn geometry<'a>(&self, item: &'a PairedItem) -> &'a Observation {
        match self {
            Attribution::Activation => &item.real,
            _ => &item.sim,
        }
    }
}

impl FromStr for Attribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((m, c)) => Self::parse(m, Some(c)),
            None => Self::parse(s, None),
        }
    }
}

/// The method's native grid: image size for activation, last-conv size for
/// feature distance, patch grid for occlusion (always raw meters).
pub fn attribute(
    model: &ModelParams,
    item: &PairedItem,
    method: Attribution,
    norm: Normalization,
) -> Result<Heatmap> {
    match method {
        Attribution::Activation => {
            activation_map_with(model, &item.real, HeadAggregation::default(), norm)
        }
        Attribution::FeatureDistance => feature_distance_with(model, &item.sim, &item.real, norm),
        Attribution::Occlusion { channel } => occlusion_map(
            model,
            &item.real,
            &item.sim,
            &item.pose,
            channel,
            PatchGrid::for_camera(&item.real.camera),
        ),
    }
}

/// [`attribute`] resampled to image size; occlusion cells are spread with
/// nearest-neighbor so every pixel carries its patch's delta.
pub fn attribute_image(
    model: &ModelParams,
    item: &PairedItem,
    method: Attribution,
    norm: Normalization,
) -> Result<Heatmap> {
    let h = attribute(model, item, method, norm)?;
    let (w, ht) = (item.real.width(), item.real.height());
    let interp = match method {
        Attribution::Occlusion { .. } => Interp::Nearest,
        _ => Interp::Bilinear,
    };
    Ok(if h.width == w && h.height == ht {
        h
    } else {
        h.resample(w, ht, interp)
    })
}

/// Dataset-level geo-map: raw per-instance maps back-projected and
/// aggregated, then normalized over the whole selection.
pub fn geomap(
    model: &ModelParams,
    ds: &PairedDataset,
    ids: Option<&[InstanceId]>,
    method: Attribution,
    strategy: AggregationStrategy,
    template: &GeoGrid,
) -> Result<GeoGrid> {
    let items: Vec<&PairedItem> = match ids {
        Some(ids) => ids
            .iter()
            .map(|&id| {
                ds.get(id)
                    .ok_or_else(|| Error::NotFound(format!("instance {id}")))
            })
            .collect::<Result<_>>()?,
        None => ds.items.iter().collect(),
    };
    let maps = par::try_map(&items, |it| {
        attribute_image(model, it, method, Normalization::None)
    })?;
    let pairs: Vec<(Heatmap, &Observation)> = maps
        .into_iter()
        .zip(&items)
        .map(|(h, it)| (h, method.geometry(it)))
        .collect();
    aggregate_backprojections(&pairs, template, default_downsample(&ds.camera), strategy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_methods() {
        assert_eq!(
            "activation".parse::<Attribution>().unwrap(),
            Attribution::Activation
        );
        assert_eq!(
            "occlusion:depth".parse::<Attribution>().unwrap(),
            Attribution::Occlusion {
                channel: OcclusionChannel::Depth
            }
        );
        assert_eq!(
            Attribution::parse("occlusion", None).unwrap(),
            Attribution::Occlusion {
                channel: OcclusionChannel::Rgb
            }
        );
        assert_eq!(
            Attribution::parse("feature_dist", None).unwrap(),
            Attribution::FeatureDistance
        );
        assert!(Attribution::parse("occlusion", Some("ir")).is_err());
        assert!(Attribution::parse("gradcam", None).is_err());
    }
}
