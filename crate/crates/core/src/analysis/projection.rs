//! 2-D projection of sim and real embeddings for the instance scatter view.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::records::PredictionRecord;
use crate::error::{Error, Result};
use crate::sim::InstanceId;

/// Variance below this is treated as all-equal input.
const DEGENERATE_VARIANCE: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub points: Vec<[f64; 2]>,
    pub degenerate: bool,
}

pub trait Projector {
    fn project(&self, rows: &[Vec<f64>]) -> Result<Projection>;
}

/// Principal components 1 and 2; each component's sign is fixed so its
/// first nonzero loading is positive.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pca;

impl Projector for Pca {
    fn project(&self, rows: &[Vec<f64>]) -> Result<Projection> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("embeddings differ in length".into()));
        }
        let mut x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        for j in 0..d {
            let mean = x.column(j).mean();
            x.column_mut(j).add_scalar_mut(-mean);
        }
        let cov = x.transpose() * &x / n.max(1) as f64;
        if d == 0 || cov.trace() <= DEGENERATE_VARIANCE {
            return Ok(Projection {
                points: vec![[0.0, 0.0]; n],
                degenerate: true,
            });
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let mut comps = Vec::with_capacity(2);
        for &k in order.iter().take(2) {
            let mut v = eig.eigenvectors.column(k).into_owned();
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    v.neg_mut();
                }
            }
            comps.push(v);
        }
        let points = (0..n)
            .map(|i| {
                let row = x.row(i);
                let mut p = [0.0; 2];
                for (slot, c) in p.iter_mut().zip(&comps) {
                    *slot = row.dot(&c.transpose());
                }
                p
            })
            .collect();
        Ok(Projection {
            points,
            degenerate: false,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPoint {
    pub id: InstanceId,
    pub sim: [f64; 2],
    pub real: [f64; 2],
    /// Euclidean distance between the sim and real points in the projection.
    pub counterpart_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProjection {
    pub points: Vec<EmbeddingPoint>,
    pub degenerate: bool,
}

/// Projects the concatenated sim and real embeddings with `projector`.
pub fn project_embeddings_with(
    records: &[PredictionRecord],
    projector: &dyn Projector,
) -> Result<EmbeddingProjection> {
    if records.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "projection needs at least 3 records, got {}",
            records.len()
        )));
    }
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| r.embedding_sim.clone())
        .chain(records.iter().map(|r| r.embedding_real.clone()))
        .collect();
    let p = projector.project(&rows)?;
    let n = records.len();
    let points = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (s, q) = (p.points[i], p.points[n + i]);
            EmbeddingPoint {
                id: r.id,
                sim: s,
                real: q,
                counterpart_distance: (s[0] - q[0]).hypot(s[1] - q[1]),
            }
        })
        .collect();
    Ok(EmbeddingProjection {
        points,
        degenerate: p.degenerate,
    })
}

pub fn project_embeddings(records: &[PredictionRecord]) -> Result<EmbeddingProjection> {
    project_embeddings_with(records, &Pca)
}
