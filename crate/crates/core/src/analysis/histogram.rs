//! Room and orientation histograms over a record selection.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::records::PredictionRecord;
use super::selection::{SelectionSet, NO_ROOM};
use crate::error::{Error, Result};
use crate::sim::{normalize_angle, Pose, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PoseSource {
    Gt,
    PredSim,
    PredReal,
}

impl PoseSource {
    pub fn of(self, r: &PredictionRecord) -> Pose {
        match self {
            PoseSource::Gt => r.pose_gt,
            PoseSource::PredSim => r.pred_sim,
            PoseSource::PredReal => r.pred_real,
        }
    }
}

fn selected<'a>(
    records: &'a [PredictionRecord],
    sel: Option<&'a SelectionSet>,
) -> impl Iterator<Item = &'a PredictionRecord> {
    records
        .iter()
        .filter(move |r| sel.is_none_or(|s| s.contains(r.id)))
}

/// Count per scene room (every room listed, plus `NONE`) of the chosen poses.
pub fn room_histogram(
    records: &[PredictionRecord],
    selection: Option<&SelectionSet>,
    scene: &Scene,
    source: PoseSource,
) -> BTreeMap<String, usize> {
    let mut out: BTreeMap<String, usize> =
        scene.rooms.iter().map(|r| (r.name.clone(), 0)).collect();
    out.insert(NO_ROOM.to_string(), 0);
    for r in selected(records, selection) {
        let p = source.of(r);
        let name = scene
            .room_at(p.x, p.y)
            .map_or(NO_ROOM, |room| room.name.as_str());
        *out.entry(name.to_string()).or_default() += 1;
    }
    out
}

/// `bins` equal sectors over `[0, 2π)`; bin 0 starts at angle 0.
pub fn orientation_histogram(
    records: &[PredictionRecord],
    selection: Option<&SelectionSet>,
    bins: usize,
    source: PoseSource,
) -> Result<Vec<usize>> {
    if bins < 4 {
        return Err(Error::InvalidArgument(format!(
            "orientation histogram needs at least 4 bins, got {bins}"
        )));
    }
    let mut out = vec![0; bins];
    for r in selected(records, selection) {
        let a = normalize_angle(source.of(r).alpha);
        out[((a / TAU * bins as f64) as usize).min(bins - 1)] += 1;
    }
    Ok(out)
}
