//! Instance selections: percentile filters, room picks and set algebra, each
//! carrying the expression that produced it so it can be replayed.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::records::PredictionRecord;
use crate::error::{Error, Result};
use crate::sim::InstanceId;

pub const NO_ROOM: &str = "NONE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RecordKey {
    ErrReal,
    ErrSim,
    Divergence,
}

impl RecordKey {
    pub fn of(self, r: &PredictionRecord) -> f64 {
        match self {
            RecordKey::ErrReal => r.err_real,
            RecordKey::ErrSim => r.err_sim,
            RecordKey::Divergence => r.simreal_divergence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PercentileMode {
    /// Smallest key values.
    Min,
    /// Largest key values (worst errors).
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum SelectionExpr {
    All,
    Ids {
        ids: BTreeSet<InstanceId>,
    },
    Percentile {
        key: RecordKey,
        mode: PercentileMode,
        fraction: f64,
    },
    Room {
        name: String,
    },
    Saved {
        name: String,
    },
    Union {
        a: Box<SelectionExpr>,
        b: Box<SelectionExpr>,
    },
    Intersect {
        a: Box<SelectionExpr>,
        b: Box<SelectionExpr>,
    },
    Complement {
        a: Box<SelectionExpr>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSet {
    pub ids: BTreeSet<InstanceId>,
    pub provenance: SelectionExpr,
}

impl SelectionSet {
    pub fn from_ids(ids: impl IntoIterator<Item = InstanceId>) -> Self {
        let ids: BTreeSet<_> = ids.into_iter().collect();
        Self {
            provenance: SelectionExpr::Ids { ids: ids.clone() },
            ids,
        }
    }

    pub fn empty() -> Self {
        Self::from_ids([])
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: InstanceId) -> bool {
        self.ids.contains(&id)
    }
}

/// Number of records picked by a fraction; products within `1e-9` of an
/// integer are not rounded up.
pub fn percentile_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let k = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (k as usize).min(n)
}

pub fn percentile_filter(
    records: &[PredictionRecord],
    key: RecordKey,
    mode: PercentileMode,
    fraction: f64,
) -> Result<SelectionSet> {
    if records.is_empty() {
        return Err(Error::EmptySelection);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    let mut order: Vec<&PredictionRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        let (ka, kb) = (key.of(a), key.of(b));
        let by_key = match mode {
            PercentileMode::Min => ka.total_cmp(&kb),
            PercentileMode::Max => kb.total_cmp(&ka),
        };
        by_key.then(a.id.cmp(&b.id))
    });
    let k = percentile_count(fraction, records.len());
    Ok(SelectionSet {
        ids: order[..k].iter().map(|r| r.id).collect(),
        provenance: SelectionExpr::Percentile {
            key,
            mode,
            fraction,
        },
    })
}

pub fn select_union(a: &SelectionSet, b: &SelectionSet) -> SelectionSet {
    SelectionSet {
        ids: a.ids.union(&b.ids).copied().collect(),
        provenance: SelectionExpr::Union {
            a: Box::new(a.provenance.clone()),
            b: Box::new(b.provenance.clone()),
        },
    }
}

pub fn select_intersect(a: &SelectionSet, b: &SelectionSet) -> SelectionSet {
    SelectionSet {
        ids: a.ids.intersection(&b.ids).copied().collect(),
        provenance: SelectionExpr::Intersect {
            a: Box::new(a.provenance.clone()),
            b: Box::new(b.provenance.clone()),
        },
    }
}

pub fn select_complement(a: &SelectionSet, universe: &BTreeSet<InstanceId>) -> SelectionSet {
    SelectionSet {
        ids: universe.difference(&a.ids).copied().collect(),
        provenance: SelectionExpr::Complement {
            a: Box::new(a.provenance.clone()),
        },
    }
}

/// What an expression is evaluated against.
pub struct SelectionContext<'a> {
    pub records: &'a [PredictionRecord],
    pub saved: &'a BTreeMap<String, SelectionSet>,
}

impl SelectionContext<'_> {
    pub fn universe(&self) -> BTreeSet<InstanceId> {
        self.records.iter().map(|r| r.id).collect()
    }
}

/// Evaluates `expr`; saved selections are replayed from their own
/// provenance so stale id lists cannot leak across datasets.
pub fn evaluate_selection(expr: &SelectionExpr, ctx: &SelectionContext) -> Result<SelectionSet> {
    resolve(expr, ctx, 0)
}

const MAX_SAVED_DEPTH: usize = 32;

fn resolve(expr: &SelectionExpr, ctx: &SelectionContext, depth: usize) -> Result<SelectionSet> {
    let universe = ctx.universe();
    let ids = match expr {
        SelectionExpr::All => universe,
        SelectionExpr::Ids { ids } => {
            if let Some(bad) = ids.iter().find(|i| !universe.contains(i)) {
                return Err(Error::NotFound(format!("instance {bad}")));
            }
            ids.clone()
        }
        SelectionExpr::Percentile {
            key,
            mode,
            fraction,
        } => percentile_filter(ctx.records, *key, *mode, *fraction)?.ids,
        SelectionExpr::Room { name } => ctx
            .records
            .iter()
            .filter(|r| r.room.as_deref().unwrap_or(NO_ROOM) == name)
            .map(|r| r.id)
            .collect(),
        SelectionExpr::Saved { name } => {
            if depth >= MAX_SAVED_DEPTH {
                return Err(Error::InvalidArgument(format!(
                    "saved selection `{name}` nests too deeply"
                )));
            }
            let s = ctx
                .saved
                .get(name)
                .ok_or_else(|| Error::NotFound(format!("saved selection `{name}`")))?;
            resolve(&s.provenance, ctx, depth + 1)?.ids
        }
        SelectionExpr::Union { a, b } => {
            let (a, b) = (resolve(a, ctx, depth)?, resolve(b, ctx, depth)?);
            a.ids.union(&b.ids).copied().collect()
        }
        SelectionExpr::Intersect { a, b } => {
            let (a, b) = (resolve(a, ctx, depth)?, resolve(b, ctx, depth)?);
            a.ids.intersection(&b.ids).copied().collect()
        }
        SelectionExpr::Complement { a } => {
            let a = resolve(a, ctx, depth)?;
            universe.difference(&a.ids).copied().collect()
        }
    };
    Ok(SelectionSet {
        ids,
        provenance: expr.clone(),
    })
}
