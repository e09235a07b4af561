//! On-disk session: scenes, dataset, checkpoints, evaluation cache, saved
//! filters and selections, indexed by `session.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gapscope_core::analysis::records::{self, find};
use gapscope_core::analysis::{
    evaluate, evaluate_selection, evaluate_with_filter, FilterConfig, PredictionRecord,
    SelectionContext, SelectionExpr, SelectionSet,
};
use gapscope_core::model::{checkpoint, fine_tune, train, ModelParams, VariantTag};
use gapscope_core::sim::{
    apply_all, generate_paired_dataset, presets, InstanceId, PairedDataset, PairedItem, Scene,
};
use gapscope_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{ServiceError, ServiceResult};

const SCHEMA: u32 = 1;
const META: &str = "session.json";

/// Trained variants, in registry order.
pub const TRAINABLE: [VariantTag; 4] = [
    VariantTag::Vanilla,
    VariantTag::DataAug,
    VariantTag::FineTuned,
    VariantTag::DepthNoise,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub path: String,
    pub hash: String,
    pub len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRef {
    pub path: String,
    /// Hash of the dataset the model was trained on.
    pub trained_on: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<VariantTag>,
    /// Ids whose real frames were used for fine-tuning.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fine_tune_ids: Vec<InstanceId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRef {
    pub path: String,
    pub base: VariantTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsRef {
    pub path: String,
    pub csv: String,
    pub dataset_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedSelection {
    pub name: String,
    pub variant: VariantTag,
    pub dataset_hash: String,
    pub set: SelectionSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub schema: u32,
    pub id: String,
    pub config: Config,
    #[serde(default)]
    pub scenes: Option<[String; 2]>,
    #[serde(default)]
    pub dataset: Option<DatasetRef>,
    #[serde(default)]
    pub models: BTreeMap<VariantTag, ModelRef>,
    #[serde(default)]
    pub filters: BTreeMap<String, FilterRef>,
    #[serde(default)]
    pub records: BTreeMap<VariantTag, RecordsRef>,
    #[serde(default)]
    pub selections: BTreeMap<String, String>,
}

/// A loaded session. Cloning is cheap (artifacts sit behind `Arc`), which is
/// what lets the server publish immutable snapshots.
#[derive(Debug, Clone)]
pub struct Session {
    root: PathBuf,
    pub meta: SessionMeta,
    scenes: Option<Arc<(Scene, Scene)>>,
    dataset: Option<Arc<PairedDataset>>,
    models: BTreeMap<VariantTag, Arc<ModelParams>>,
    filters: BTreeMap<String, Arc<FilterConfig>>,
    records: BTreeMap<VariantTag, Arc<Vec<PredictionRecord>>>,
    selections: BTreeMap<String, Arc<SavedSelection>>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> ServiceResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn file_stem(v: &VariantTag) -> String {
    v.to_string().replace(':', "--")
}

fn check_name(kind: &str, name: &str) -> ServiceResult<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok && !name.starts_with('.') {
        Ok(())
    } else {
        Err(CoreError::InvalidArgument(format!("bad {kind} name {name:?}")).into())
    }
}

/// Evenly spread subset of `n` positions covering `fraction` of them.
pub fn spread_subset(n: usize, fraction: f64) -> Vec<usize> {
    let k = ((n as f64 * fraction).round() as usize).clamp(1, n.max(1));
    (0..k).map(|i| i * n / k).collect()
}

impl Session {
    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Opens `root`, creating an empty session there if none exists. A
    /// supplied config replaces the stored one.
    pub fn open_or_create(root: impl AsRef<Path>, config: Option<Config>) -> ServiceResult<Self> {
        let root = root.as_ref();
        if root.join(META).exists() {
            let mut s = Self::open(root)?;
            if let Some(cfg) = config {
                if cfg != s.meta.config {
                    s.meta.config = cfg;
                    s.persist()?;
                }
            }
            Ok(s)
        } else {
            let config = config.unwrap_or_default();
            config.validate()?;
            let meta = SessionMeta {
                schema: SCHEMA,
                id: config.session.id.clone(),
                config,
                scenes: None,
                dataset: None,
                models: BTreeMap::new(),
                filters: BTreeMap::new(),
                records: BTreeMap::new(),
                selections: BTreeMap::new(),
            };
            let s = Self::empty(root.to_path_buf(), meta);
            s.persist()?;
            Ok(s)
        }
    }

    fn empty(root: PathBuf, meta: SessionMeta) -> Self {
        Self {
            root,
            meta,
            scenes: None,
            dataset: None,
            models: BTreeMap::new(),
            filters: BTreeMap::new(),
            records: BTreeMap::new(),
            selections: BTreeMap::new(),
        }
    }

    /// Loads every artifact the index references. Missing files are an
    /// error; cached records computed on another dataset are dropped.
    pub fn open(root: impl AsRef<Path>) -> ServiceResult<Self> {
        let root = root.as_ref().to_path_buf();
        let text = std::fs::read_to_string(root.join(META))
            .map_err(|e| ServiceError::Session(format!("no session at {}: {e}", root.display())))?;
        let meta: SessionMeta = serde_json::from_str(&text)?;
        if meta.schema != SCHEMA {
            return Err(ServiceError::Session(format!(
                "unsupported session schema {}",
                meta.schema
            )));
        }
        let mut s = Self::empty(root.clone(), meta);
        let resolve = |rel: &str| -> ServiceResult<PathBuf> {
            let p = root.join(rel);
            if p.exists() {
                Ok(p)
            } else {
                Err(ServiceError::Session(format!(
                    "missing artifact {}",
                    p.display()
                )))
            }
        };
        let meta = s.meta.clone();
        if let Some([sim, real]) = &meta.scenes {
            s.scenes = Some(Arc::new((
                Scene::load(resolve(sim)?)?,
                Scene::load(resolve(real)?)?,
            )));
        }
        if let Some(d) = &meta.dataset {
            let ds = PairedDataset::load(resolve(&d.path)?)?;
            let hash = ds.content_hash();
            if hash != d.hash {
                return Err(ServiceError::Session(format!(
                    "dataset at {} does not match its recorded hash",
                    d.path
                )));
            }
            s.dataset = Some(Arc::new(ds));
        }
        for (v, m) in &meta.models {
            s.models
                .insert(v.clone(), Arc::new(checkpoint::load(resolve(&m.path)?)?));
        }
        for (id, f) in &meta.filters {
            s.filters
                .insert(id.clone(), Arc::new(FilterConfig::load(resolve(&f.path)?)?));
        }
        for (name, rel) in &meta.selections {
            let sel: SavedSelection = serde_json::from_slice(&std::fs::read(resolve(rel)?)?)?;
            s.selections.insert(name.clone(), Arc::new(sel));
        }
        let current = s.dataset_hash().map(str::to_string);
        let mut stale = Vec::new();
        for (v, r) in &meta.records {
            if Some(&r.dataset_hash) == current.as_ref() {
                s.records
                    .insert(v.clone(), Arc::new(records::load_json(resolve(&r.path)?)?));
            } else {
                stale.push(v.clone());
            }
        }
        if !stale.is_empty() {
            for v in stale {
                s.drop_records(&v);
            }
            s.persist()?;
        }
        Ok(s)
    }

    fn persist(&self) -> ServiceResult<()> {
        write_atomic(
            &self.root.join(META),
            &serde_json::to_vec_pretty(&self.meta)?,
        )
    }

    pub fn config(&self) -> &Config {
        &self.meta.config
    }

    pub fn dataset_hash(&self) -> Option<&str> {
        self.meta.dataset.as_ref().map(|d| d.hash.as_str())
    }

    pub fn scenes(&self) -> ServiceResult<&(Scene, Scene)> {
        self.scenes
            .as_deref()
            .ok_or_else(|| ServiceError::Session("scenes not generated; run `scene gen`".into()))
    }

    pub fn dataset(&self) -> ServiceResult<&Arc<PairedDataset>> {
        self.dataset
            .as_ref()
            .ok_or_else(|| ServiceError::Session("no dataset; run `dataset gen`".into()))
    }

    pub fn item(&self, id: InstanceId) -> ServiceResult<&PairedItem> {
        self.dataset()?
            .get(id)
            .ok_or_else(|| CoreError::NotFound(format!("instance {id}")).into())
    }

    /// Trained variants and registered filters.
    pub fn variants(&self) -> Vec<VariantTag> {
        let mut out: Vec<VariantTag> = TRAINABLE
            .iter()
            .filter(|v| self.models.contains_key(v))
            .cloned()
            .collect();
        out.extend(
            self.filters
                .keys()
                .map(|id| VariantTag::Filtered(id.clone())),
        );
        out
    }

    pub fn filter(&self, id: &str) -> ServiceResult<&FilterConfig> {
        self.filters
            .get(id)
            .map(|f| &**f)
            .ok_or_else(|| CoreError::NotFound(format!("filter `{id}`")).into())
    }

    pub fn filter_base(&self, id: &str) -> ServiceResult<&VariantTag> {
        self.meta
            .filters
            .get(id)
            .map(|f| &f.base)
            .ok_or_else(|| CoreError::NotFound(format!("filter `{id}`")).into())
    }

    /// The weights behind `variant`; a filtered variant resolves to its base.
    pub fn model(&self, variant: &VariantTag) -> ServiceResult<&Arc<ModelParams>> {
        let key = match variant {
            VariantTag::Filtered(id) => self.filter_base(id)?,
            v => v,
        };
        self.models
            .get(key)
            .ok_or_else(|| CoreError::NotFound(format!("variant {variant}")).into())
    }

    pub fn cached_records(&self, variant: &VariantTag) -> Option<&Arc<Vec<PredictionRecord>>> {
        self.records.get(variant)
    }

    fn drop_records(&mut self, v: &VariantTag) {
        self.records.remove(v);
        if let Some(r) = self.meta.records.remove(v) {
            let _ = std::fs::remove_file(self.path(&r.path));
            let _ = std::fs::remove_file(self.path(&r.csv));
        }
    }

    fn drop_records_using(&mut self, base: &VariantTag) {
        let mut hit = vec![base.clone()];
        hit.extend(
            self.meta
                .filters
                .iter()
                .filter(|(_, f)| &f.base == base)
                .map(|(id, _)| VariantTag::Filtered(id.clone())),
        );
        for v in hit {
            self.drop_records(&v);
        }
    }

    /// Writes the sim scene (configured file or built-in floor) and its
    /// perturbed real twin.
    pub fn gen_scenes(&mut self) -> ServiceResult<&(Scene, Scene)> {
        let cfg = &self.meta.config;
        let sim = match &cfg.scene.sim {
            Some(p) => Scene::load(p)?,
            None => presets::default_scene(),
        };
        sim.validate()?;
        let real = apply_all(&sim, &cfg.scene.perturbations)?;
        let (a, b) = (
            "scenes/sim.json".to_string(),
            "scenes/real.json".to_string(),
        );
        write_atomic(&self.path(&a), sim.to_json()?.as_bytes())?;
        write_atomic(&self.path(&b), real.to_json()?.as_bytes())?;
        self.meta.scenes = Some([a, b]);
        self.scenes = Some(Arc::new((sim, real)));
        self.persist()?;
        Ok(self.scenes.as_deref().expect("just set"))
    }

    /// Renders and stores a paired dataset; returns its content hash.
    /// Cached records and saved selections on an older dataset go stale.
    pub fn gen_dataset(
        &mut self,
        n: Option<usize>,
        seed: Option<u64>,
    ) -> ServiceResult<&DatasetRef> {
        if self.scenes.is_none() {
            self.gen_scenes()?;
        }
        let cfg = self.meta.config.clone();
        let (n, seed) = (n.unwrap_or(cfg.dataset.n), seed.unwrap_or(cfg.dataset.seed));
        let (sim, _) = self.scenes()?;
        let ds = generate_paired_dataset(
            sim,
            &cfg.scene.perturbations,
            &cfg.camera,
            n,
            cfg.dataset.min_dist,
            seed,
        )?;
        let hash = ds.content_hash();
        if self.dataset_hash() != Some(hash.as_str()) {
            let dir = self.path("dataset");
            let tmp = self.path("dataset.tmp");
            if tmp.exists() {
                std::fs::remove_dir_all(&tmp)?;
            }
            ds.save(&tmp)?;
            if dir.exists() {
                std::fs::remove_dir_all(&dir)?;
            }
            std::fs::rename(&tmp, &dir)?;
            let cached: Vec<VariantTag> = self.meta.records.keys().cloned().collect();
            for v in cached {
                self.drop_records(&v);
            }
        }
        self.meta.dataset = Some(DatasetRef {
            path: "dataset".into(),
            hash,
            len: ds.len(),
            seed,
        });
        self.dataset = Some(Arc::new(ds));
        self.persist()?;
        Ok(self.meta.dataset.as_ref().expect("just set"))
    }

    /// Trains `variant` on the session dataset and registers the
    /// checkpoint. Fine-tuning starts from the vanilla model and uses the
    /// real frames of an evenly spread subset of the dataset.
    pub fn train(
        &mut self,
        variant: &VariantTag,
        epochs: Option<usize>,
    ) -> ServiceResult<Arc<ModelParams>> {
        let ds = self.dataset()?.clone();
        let cfg = &self.meta.config;
        let mut tc = cfg.training.clone();
        let mut base = None;
        let mut fine_tune_ids = Vec::new();
        let model = match variant {
            VariantTag::Filtered(_) => {
                return Err(CoreError::InvalidArgument(
                    "filtered variants are registered with a filter, not trained".into(),
                )
                .into())
            }
            VariantTag::FineTuned => {
                let start = self.models.get(&VariantTag::Vanilla).ok_or_else(|| {
                    ServiceError::Session("fine-tuning needs a trained vanilla model".into())
                })?;
                tc.epochs = cfg.fine_tune.epochs;
                tc.learning_rate = cfg.fine_tune.learning_rate;
                if let Some(e) = epochs {
                    tc.epochs = e;
                }
                fine_tune_ids = spread_subset(ds.len(), cfg.fine_tune.fraction)
                    .iter()
                    .map(|&i| ds.items[i].id)
                    .collect();
                let keep: std::collections::BTreeSet<_> = fine_tune_ids.iter().copied().collect();
                base = Some(VariantTag::Vanilla);
                fine_tune(start, &ds.subset(|id| keep.contains(&id)), &tc)?
            }
            v => {
                if let Some(e) = epochs {
                    tc.epochs = e;
                }
                train(&ds, &tc, v.clone())?
            }
        };
        let rel = format!("models/{}.gsck", file_stem(variant));
        write_atomic(&self.path(&rel), &checkpoint::to_bytes(&model)?)?;
        let trained_on = self.dataset_hash().expect("dataset present").to_string();
        self.meta.models.insert(
            variant.clone(),
            ModelRef {
                path: rel,
                trained_on,
                base,
                fine_tune_ids,
            },
        );
        let model = Arc::new(model);
        self.models.insert(variant.clone(), model.clone());
        self.drop_records_using(variant);
        self.persist()?;
        Ok(model)
    }

    /// Evaluation records for `variant`, from the cache when it matches the
    /// current dataset, otherwise computed and cached.
    pub fn records(&mut self, variant: &VariantTag) -> ServiceResult<Arc<Vec<PredictionRecord>>> {
        if let Some(r) = self.records.get(variant) {
            return Ok(r.clone());
        }
        let ds = self.dataset()?.clone();
        let model = self.model(variant)?.clone();
        let (recs, filter_id) = match variant {
            VariantTag::Filtered(id) => (
                evaluate_with_filter(&model, &ds, self.filter(id)?)?.1,
                Some(id.clone()),
            ),
            _ => (evaluate(&*model, &ds)?, None),
        };
        self.store_records(variant, recs, filter_id)
    }

    fn store_records(
        &mut self,
        variant: &VariantTag,
        recs: Vec<PredictionRecord>,
        filter_id: Option<String>,
    ) -> ServiceResult<Arc<Vec<PredictionRecord>>> {
        let stem = file_stem(variant);
        let (json, csv) = (
            format!("records/{stem}.json"),
            format!("records/{stem}.csv"),
        );
        write_atomic(&self.path(&json), &serde_json::to_vec(&recs)?)?;
        let mut buf = Vec::new();
        records::write_csv(&recs, &mut buf)?;
        write_atomic(&self.path(&csv), &buf)?;
        let dataset_hash = self.dataset_hash().expect("dataset present").to_string();
        self.meta.records.insert(
            variant.clone(),
            RecordsRef {
                path: json,
                csv,
                dataset_hash,
                filter_id,
            },
        );
        let recs = Arc::new(recs);
        self.records.insert(variant.clone(), recs.clone());
        self.persist()?;
        Ok(recs)
    }

    /// Registers `filter` over `base`, evaluates it, and returns the new
    /// variant's records. Re-registering an id replaces it.
    pub fn add_filter(
        &mut self,
        filter: FilterConfig,
        base: &VariantTag,
    ) -> ServiceResult<Arc<Vec<PredictionRecord>>> {
        filter.validate()?;
        if base.is_filtered() {
            return Err(CoreError::InvalidArgument(
                "a filter's base must be a trained variant".into(),
            )
            .into());
        }
        let model = self
            .models
            .get(base)
            .ok_or_else(|| CoreError::NotFound(format!("variant {base}")))?
            .clone();
        let ds = self.dataset()?.clone();
        let (variant, recs) = evaluate_with_filter(&model, &ds, &filter)?;
        let rel = format!("filters/{}.json", filter.id);
        write_atomic(&self.path(&rel), &serde_json::to_vec_pretty(&filter)?)?;
        self.drop_records(&variant);
        self.meta.filters.insert(
            filter.id.clone(),
            FilterRef {
                path: rel,
                base: base.clone(),
            },
        );
        self.filters
            .insert(filter.id.clone(), Arc::new(filter.clone()));
        self.store_records(&variant, recs, Some(filter.id))
    }

    pub fn selection(&self, name: &str) -> ServiceResult<&SavedSelection> {
        let s = self
            .selections
            .get(name)
            .ok_or_else(|| CoreError::NotFound(format!("saved selection `{name}`")))?;
        if Some(s.dataset_hash.as_str()) != self.dataset_hash() {
            return Err(ServiceError::Stale(format!(
                "selection `{name}` was saved against another dataset"
            )));
        }
        Ok(s)
    }

    pub fn saved_selections(&self) -> impl Iterator<Item = &SavedSelection> {
        self.selections.values().map(|s| &**s)
    }

    /// Evaluates `expr` against `records`. Every saved selection it refers
    /// to must belong to the current dataset.
    pub fn evaluate_selection(
        &self,
        expr: &SelectionExpr,
        records: &[PredictionRecord],
    ) -> ServiceResult<SelectionSet> {
        let mut names = Vec::new();
        saved_refs(expr, &mut names);
        let mut saved = BTreeMap::new();
        let mut pending = names;
        while let Some(name) = pending.pop() {
            if saved.contains_key(&name) {
                continue;
            }
            let s = self.selection(&name)?;
            saved_refs(&s.set.provenance, &mut pending);
            saved.insert(name, s.set.clone());
        }
        Ok(evaluate_selection(
            expr,
            &SelectionContext {
                records,
                saved: &saved,
            },
        )?)
    }

    pub fn save_selection(
        &mut self,
        name: &str,
        variant: &VariantTag,
        set: SelectionSet,
    ) -> ServiceResult<SavedSelection> {
        check_name("selection", name)?;
        self.dataset()?;
        let dataset_hash = self.dataset_hash().expect("dataset present").to_string();
        let sel = SavedSelection {
            name: name.to_string(),
            variant: variant.clone(),
            dataset_hash,
            set,
        };
        let rel = format!("selections/{name}.json");
        write_atomic(&self.path(&rel), &serde_json::to_vec_pretty(&sel)?)?;
        self.meta.selections.insert(name.to_string(), rel);
        self.selections
            .insert(name.to_string(), Arc::new(sel.clone()));
        self.persist()?;
        Ok(sel)
    }

    pub fn record(
        &self,
        variant: &VariantTag,
        id: InstanceId,
    ) -> ServiceResult<Option<&PredictionRecord>> {
        self.item(id)?;
        Ok(self.records.get(variant).map(|r| find(r, id)).transpose()?)
    }

    pub fn exports_dir(&self) -> PathBuf {
        self.path("exports")
    }
}

fn saved_refs(expr: &SelectionExpr, out: &mut Vec<String>) {
    match expr {
        SelectionExpr::Saved { name } => out.push(name.clone()),
        SelectionExpr::Union { a, b } | SelectionExpr::Intersect { a, b } => {
            saved_refs(a, out);
            saved_refs(b, out);
        }
        SelectionExpr::Complement { a } => saved_refs(a, out),
        _ => {}
    }
}
