use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::par;
use crate::sim::{
    angular_distance, InstanceId, Observation, PairedDataset, PairedItem, Pose, Scene,
};

/// Anything that maps an observation to a pose and an embedding.
pub trait PosePredictor: Sync {
    fn predict(&self, obs: &Observation) -> Result<(Pose, Vec<f64>)>;
}

impl PosePredictor for ModelParams {
    fn predict(&self, obs: &Observation) -> Result<(Pose, Vec<f64>)> {
        let r = self.forward(obs)?;
        Ok((r.pose_pred, r.embedding))
    }
}

/// Per-instance sim/real outcome of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: InstanceId,
    pub pose_gt: Pose,
    pub pred_sim: Pose,
    pub pred_real: Pose,
    pub embedding_sim: Vec<f64>,
    pub embedding_real: Vec<f64>,
    pub err_sim: f64,
    pub err_real: f64,
    pub ang_err_sim: f64,
    pub ang_err_real: f64,
    /// Distance in meters between the sim and real predictions.
    pub simreal_divergence: f64,
    pub room: Option<String>,
}

impl PredictionRecord {
    pub fn build(
        id: InstanceId,
        gt: Pose,
        (pred_sim, embedding_sim): (Pose, Vec<f64>),
        (pred_real, embedding_real): (Pose, Vec<f64>),
        scene: &Scene,
    ) -> Self {
        Self {
            id,
            pose_gt: gt,
            err_sim: pred_sim.distance(&gt),
            err_real: pred_real.distance(&gt),
            ang_err_sim: angular_distance(pred_sim.alpha, gt.alpha),
            ang_err_real: angular_distance(pred_real.alpha, gt.alpha),
            simreal_divergence: pred_sim.distance(&pred_real),
            room: scene.room_at(gt.x, gt.y).map(|r| r.name.clone()),
            pred_sim,
            pred_real,
            embedding_sim,
            embedding_real,
        }
    }
}

fn evaluate_items<P>(
    model: &P,
    ds: &PairedDataset,
    real_of: impl Fn(&PairedItem) -> Result<Observation> + Sync + Send,
) -> Result<Vec<PredictionRecord>>
where
    P: PosePredictor,
{
    par::try_map(&ds.items, |it| {
        let sim = model.predict(&it.sim)?;
        let real = model.predict(&real_of(it)?)?;
        Ok(PredictionRecord::build(
            it.id,
            it.pose,
            sim,
            real,
            &ds.scene_sim,
        ))
    })
}

/// One record per dataset item, in id order.
pub fn evaluate<P: PosePredictor>(model: &P, ds: &PairedDataset) -> Result<Vec<PredictionRecord>> {
    evaluate_items(model, ds, |it| Ok(it.real.clone()))
}

/// Like [`evaluate`] with a transform applied to every real observation.
pub fn evaluate_mapped<P, F>(
    model: &P,
    ds: &PairedDataset,
    map_real: F,
) -> Result<Vec<PredictionRecord>>
where
    P: PosePredictor,
    F: Fn(&Observation) -> Observation + Sync + Send,
{
    evaluate_items(model, ds, |it| Ok(map_real(&it.real)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean_err_sim: f64,
    pub mean_err_real: f64,
    pub median_err_sim: f64,
    pub median_err_real: f64,
    pub mean_divergence: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn summarize(records: &[PredictionRecord]) -> Summary {
    let n = records.len().max(1) as f64;
    Summary {
        count: records.len(),
        mean_err_sim: records.iter().map(|r| r.err_sim).sum::<f64>() / n,
        mean_err_real: records.iter().map(|r| r.err_real).sum::<f64>() / n,
        median_err_sim: median(records.iter().map(|r| r.err_sim).collect()),
        median_err_real: median(records.iter().map(|r| r.err_real).collect()),
        mean_divergence: records.iter().map(|r| r.simreal_divergence).sum::<f64>() / n,
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    id: InstanceId,
    gt_x: f64,
    gt_y: f64,
    gt_alpha: f64,
    sim_x: f64,
    sim_y: f64,
    sim_alpha: f64,
    real_x: f64,
    real_y: f64,
    real_alpha: f64,
    err_sim: f64,
    err_real: f64,
    ang_err_sim: f64,
    ang_err_real: f64,
    simreal_divergence: f64,
    room: String,
}

/// CSV with one row per record; embeddings are omitted (see JSON export).
pub fn write_csv<W: std::io::Write>(records: &[PredictionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            id: r.id,
            gt_x: r.pose_gt.x,
            gt_y: r.pose_gt.y,
            gt_alpha: r.pose_gt.alpha,
            sim_x: r.pred_sim.x,
            sim_y: r.pred_sim.y,
            sim_alpha: r.pred_sim.alpha,
            real_x: r.pred_real.x,
            real_y: r.pred_real.y,
            real_alpha: r.pred_real.alpha,
            err_sim: r.err_sim,
            err_real: r.err_real,
            ang_err_sim: r.ang_err_sim,
            ang_err_real: r.ang_err_real,
            simreal_divergence: r.simreal_divergence,
            room: r.room.clone().unwrap_or_else(|| "NONE".into()),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    write_csv(records, std::fs::File::create(path)?)
}

pub fn save_json(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serde_json::to_vec(records)?)?;
    Ok(())
}

pub fn load_json(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

pub fn find(records: &[PredictionRecord], id: InstanceId) -> Result<&PredictionRecord> {
    records
        .binary_search_by_key(&id, |r| r.id)
        .map(|i| &records[i])
        .map_err(|_| Error::InvalidArgument(format!("no record for instance {id}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_paired_dataset, presets, CameraSpec, Perturbation};

    /// Reads the ground truth back out of the observation.
    struct Oracle;
    impl PosePredictor for Oracle {
        fn predict(&self, obs: &Observation) -> Result<(Pose, Vec<f64>)> {
            Ok((obs.require_pose()?, vec![0.0; 3]))
        }
    }

    fn ds(ps: &[Perturbation]) -> PairedDataset {
        let cam = CameraSpec {
            width: 16,
            height: 16,
            ..CameraSpec::default()
        };
        generate_paired_dataset(&presets::default_scene(), ps, &cam, 10, 0.3, 2).unwrap()
    }

    #[test]
    fn oracle_has_zero_errors() {
        let recs = evaluate(&Oracle, &ds(&[])).unwrap();
        assert_eq!(recs.len(), 10);
        assert!(recs
            .iter()
            .all(|r| r.err_sim == 0.0 && r.err_real == 0.0 && r.ang_err_real == 0.0));
    }

    #[test]
    fn identical_pairs_have_no_divergence() {
        let d = ds(&[]);
        let m = ModelParams::init(
            crate::model::Architecture::desk(16, 16, [22.0, 22.0]),
            crate::model::VariantTag::Vanilla,
            3,
            0.3,
            10.0,
        )
        .unwrap();
        for r in evaluate(&m, &d).unwrap() {
            assert_eq!(r.pred_sim, r.pred_real);
            assert_eq!(r.simreal_divergence, 0.0);
            assert!(r.err_sim >= 0.0 && (0.0..=std::f64::consts::PI).contains(&r.ang_err_sim));
            assert!(r.room.is_some());
        }
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let recs = evaluate(
            &Oracle,
            &ds(&[Perturbation::BrightnessShift { shift: 0.1 }]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), recs.len() + 1);
        assert!(text.starts_with("id,gt_x,gt_y"));
    }
}
