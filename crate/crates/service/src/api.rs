//! REST API over a session. Readers work on an immutable snapshot; every
//! mutation (cache fill, filter registration, saved selection) goes through
//! one writer lock and publishes a new snapshot when it completes.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use gapscope_core::analysis::records::write_csv;
use gapscope_core::analysis::{
    apply_filters, attribute, attribute_image, geomap, orientation_histogram, project_embeddings,
    room_histogram, summarize, Attribution, EmbeddingProjection, FilterConfig, Heatmap, Interp,
    Normalization, PosePredictor, PoseSource, PredictionRecord, SelectionExpr, SelectionSet,
    Summary,
};
use gapscope_core::geo::{
    backproject, colorize_grid, colorize_heatmap, default_downsample, depth_png, rgb_png,
};
use gapscope_core::geo::{AggregationStrategy, GeoGrid, GridMetadata};
use gapscope_core::model::VariantTag;
use gapscope_core::sim::{CameraSpec, InstanceId, PairedItem, Pose, Scene, World};
use gapscope_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};
use crate::session::{DatasetRef, SavedSelection, Session};

#[derive(Debug)]
pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        ApiError(e.into())
    }
}

pub fn status_of(e: &ServiceError) -> StatusCode {
    match e {
        ServiceError::Core(c) => match c {
            CoreError::NotFound(_) | CoreError::NoSuchObject(_) => StatusCode::NOT_FOUND,
            CoreError::InvalidArgument(_)
            | CoreError::EmptySelection
            | CoreError::PairMismatch(_)
            | CoreError::InputShapeMismatch { .. }
            | CoreError::GridMismatch(_)
            | CoreError::InvalidScene(_)
            | CoreError::Json(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        },
        ServiceError::Stale(_) | ServiceError::Session(_) => StatusCode::CONFLICT,
        ServiceError::Config(_) => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(&self.0), Json(self.0.body())).into_response()
    }
}

fn bad_request(msg: impl std::fmt::Display) -> ApiError {
    ApiError(CoreError::InvalidArgument(msg.to_string()).into())
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        bad_request(e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub struct AppState {
    snapshot: RwLock<Arc<Session>>,
    writer: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(session: Session) -> Arc<Self> {
        Arc::new(Self {
            snapshot: RwLock::new(Arc::new(session)),
            writer: tokio::sync::Mutex::new(()),
        })
    }

    pub fn snapshot(&self) -> Arc<Session> {
        self.snapshot
            .read()
            .expect("snapshot lock poisoned")
            .clone()
    }

    /// Runs `f` on a private copy of the session and publishes it on
    /// success. Writers are serialized; readers keep the old snapshot
    /// until the swap.
    pub async fn mutate<T, F>(&self, f: F) -> ServiceResult<T>
    where
        F: FnOnce(&mut Session) -> ServiceResult<T> + Send + 'static,
        T: Send + 'static,
    {
        let _guard = self.writer.lock().await;
        let mut next = (*self.snapshot()).clone();
        let (next, out) = tokio::task::spawn_blocking(move || {
            let out = f(&mut next);
            (next, out)
        })
        .await
        .map_err(|e| ServiceError::Session(format!("worker failed: {e}")))?;
        let out = out?;
        *self.snapshot.write().expect("snapshot lock poisoned") = Arc::new(next);
        Ok(out)
    }

    /// Cached records, or computed through the writer.
    pub async fn records(
        &self,
        variant: &VariantTag,
    ) -> ServiceResult<(Arc<Session>, Arc<Vec<PredictionRecord>>)> {
        let snap = self.snapshot();
        if let Some(r) = snap.cached_records(variant) {
            return Ok((snap.clone(), r.clone()));
        }
        snap.model(variant)?;
        let v = variant.clone();
        let recs = self.mutate(move |s| s.records(&v)).await?;
        Ok((self.snapshot(), recs))
    }
}

async fn blocking<T, F>(f: F) -> ServiceResult<T>
where
    F: FnOnce() -> ServiceResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Session(format!("worker failed: {e}")))?
}

type AppRef = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", get(get_session))
        .route("/scene", get(get_scene))
        .route("/models", get(get_models))
        .route("/records", get(get_records))
        .route("/selection", post(post_selection))
        .route("/selections/{name}", get(get_saved_selection))
        .route("/instance/{id}", get(get_instance))
        .route(
            "/instance/{id}/image/{world}/{kind}",
            get(get_instance_image),
        )
        .route("/instance/{id}/heatmap", get(get_heatmap))
        .route("/instance/{id}/geomap", get(get_instance_geomap))
        .route("/instance/{id}/predict", post(post_predict))
        .route("/filters", post(post_filter))
        .route("/geomap", get(get_geomap))
        .route("/projection", get(get_projection))
        .route("/histogram", get(get_histogram))
        .with_state(state)
}

fn parse_variant(v: Option<&str>) -> ApiResult<VariantTag> {
    Ok(v.unwrap_or("vanilla").parse::<VariantTag>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionInfo {
    pub name: String,
    pub variant: VariantTag,
    pub size: usize,
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterInfo {
    pub config: FilterConfig,
    pub base: VariantTag,
}

/// Everything a client needs to configure itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub id: String,
    pub camera: CameraSpec,
    pub dataset: Option<DatasetRef>,
    pub variants: Vec<VariantTag>,
    pub filters: BTreeMap<String, FilterInfo>,
    pub selections: Vec<SelectionInfo>,
    pub rooms: Vec<String>,
    pub extent: Option<[f64; 2]>,
    pub methods: Vec<String>,
    pub strategies: Vec<AggregationStrategy>,
}

pub fn describe(s: &Session) -> ServiceResult<SessionDescriptor> {
    let mut filters = BTreeMap::new();
    for v in s.variants() {
        if let VariantTag::Filtered(id) = v {
            filters.insert(
                id.clone(),
                FilterInfo {
                    config: s.filter(&id)?.clone(),
                    base: s.filter_base(&id)?.clone(),
                },
            );
        }
    }
    let scene = s.scenes().ok().map(|(sim, _)| sim);
    Ok(SessionDescriptor {
        id: s.meta.id.clone(),
        camera: s.dataset().map(|d| d.camera).unwrap_or(s.config().camera),
        dataset: s.meta.dataset.clone(),
        variants: s.variants(),
        filters,
        selections: s
            .saved_selections()
            .map(|sel| SelectionInfo {
                name: sel.name.clone(),
                variant: sel.variant.clone(),
                size: sel.set.len(),
                stale: Some(sel.dataset_hash.as_str()) != s.dataset_hash(),
            })
            .collect(),
        rooms: scene
            .map(|sc| sc.rooms.iter().map(|r| r.name.clone()).collect())
            .unwrap_or_default(),
        extent: scene.map(|sc| sc.extent),
        methods: [
            "activation",
            "occlusion:rgb",
            "occlusion:depth",
            "occlusion:both",
            "feature_distance",
        ]
        .map(String::from)
        .to_vec(),
        strategies: vec![
            AggregationStrategy::Sum,
            AggregationStrategy::Mean,
            AggregationStrategy::Max,
        ],
    })
}

async fn get_session(State(st): AppRef) -> ApiResult<Json<SessionDescriptor>> {
    Ok(Json(describe(&st.snapshot())?))
}

#[derive(Debug, Deserialize)]
struct WorldQuery {
    world: Option<World>,
}

async fn get_scene(
    State(st): AppRef,
    q: Result<Query<WorldQuery>, QueryRejection>,
) -> ApiResult<Json<Scene>> {
    let Query(q) = q?;
    let snap = st.snapshot();
    let (sim, real) = snap.scenes()?;
    Ok(Json(if q.world == Some(World::Real) {
        real.clone()
    } else {
        sim.clone()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub variant: VariantTag,
    /// The checkpoint a filtered variant runs on.
    pub base: Option<VariantTag>,
    pub parameters: usize,
    pub summary: Summary,
}

async fn get_models(State(st): AppRef) -> ApiResult<Json<Vec<ModelInfo>>> {
    let mut out = Vec::new();
    for v in st.snapshot().variants() {
        let (snap, recs) = st.records(&v).await?;
        let base = match &v {
            VariantTag::Filtered(id) => Some(snap.filter_base(id)?.clone()),
            _ => None,
        };
        out.push(ModelInfo {
            parameters: snap.model(&v)?.parameter_count(),
            summary: summarize(&recs),
            variant: v,
            base,
        });
    }
    Ok(Json(out))
}

#[derive(Debug, Deserialize)]
struct RecordsQuery {
    variant: Option<String>,
    format: Option<String>,
    selection: Option<String>,
}

async fn get_records(
    State(st): AppRef,
    q: Result<Query<RecordsQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = q?;
    let v = parse_variant(q.variant.as_deref())?;
    let (snap, recs) = st.records(&v).await?;
    let recs: Vec<PredictionRecord> = match &q.selection {
        Some(name) => {
            let set =
                snap.evaluate_selection(&SelectionExpr::Saved { name: name.clone() }, &recs)?;
            recs.iter()
                .filter(|r| set.contains(r.id))
                .cloned()
                .collect()
        }
        None => recs.to_vec(),
    };
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(recs).into_response()),
        Some("csv") => {
            let mut buf = Vec::new();
            write_csv(&recs, &mut buf)?;
            Ok(([(header::CONTENT_TYPE, "text/csv")], buf).into_response())
        }
        Some(other) => Err(bad_request(format!("unknown format `{other}`"))),
    }
}

#[derive(Debug, Deserialize)]
struct SelectionQuery {
    variant: Option<String>,
    save: Option<String>,
}

async fn post_selection(
    State(st): AppRef,
    q: Result<Query<SelectionQuery>, QueryRejection>,
    body: Result<Json<SelectionExpr>, JsonRejection>,
) -> ApiResult<Json<SelectionSet>> {
    let (Query(q), Json(expr)) = (q?, body?);
    let v = parse_variant(q.variant.as_deref())?;
    let (snap, recs) = st.records(&v).await?;
    let set = snap.evaluate_selection(&expr, &recs)?;
    if let Some(name) = q.save {
        let saved = set.clone();
        st.mutate(move |s| s.save_selection(&name, &v, saved))
            .await?;
    }
    Ok(Json(set))
}

async fn get_saved_selection(
    State(st): AppRef,
    Path(name): Path<String>,
) -> ApiResult<Json<SavedSelection>> {
    Ok(Json(st.snapshot().selection(&name)?.clone()))
}

#[derive(Debug, Deserialize)]
struct VariantQuery {
    variant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Images {
    pub sim_rgb: String,
    pub sim_depth: String,
    pub real_rgb: String,
    pub real_depth: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceView {
    pub id: InstanceId,
    pub pose_gt: Pose,
    pub variant: VariantTag,
    pub record: PredictionRecord,
    /// Base64-encoded PNGs.
    pub images: Images,
}

async fn get_instance(
    State(st): AppRef,
    Path(id): Path<InstanceId>,
    q: Result<Query<VariantQuery>, QueryRejection>,
) -> ApiResult<Json<InstanceView>> {
    let Query(q) = q?;
    let v = parse_variant(q.variant.as_deref())?;
    st.snapshot().item(id)?;
    let (snap, _) = st.records(&v).await?;
    let view = blocking(move || {
        let it = snap.item(id)?;
        let enc = |png: gapscope_core::Result<Vec<u8>>| png.map(|b| B64.encode(b));
        Ok(InstanceView {
            id,
            pose_gt: it.pose,
            record: snap.record(&v, id)?.expect("records cached").clone(),
            variant: v,
            images: Images {
                sim_rgb: enc(rgb_png(&it.sim))?,
                sim_depth: enc(depth_png(&it.sim))?,
                real_rgb: enc(rgb_png(&it.real))?,
                real_depth: enc(depth_png(&it.real))?,
            },
        })
    })
    .await?;
    Ok(Json(view))
}

async fn get_instance_image(
    State(st): AppRef,
    Path((id, world, kind)): Path<(InstanceId, String, String)>,
) -> ApiResult<Response> {
    let snap = st.snapshot();
    let it = snap.item(id)?;
    let obs = match world.as_str() {
        "sim" => &it.sim,
        "real" => &it.real,
        other => {
            return Err(ApiError(
                CoreError::NotFound(format!("world `{other}`")).into(),
            ))
        }
    };
    let png = match kind.as_str() {
        "rgb" => rgb_png(obs)?,
        "depth" => depth_png(obs)?,
        other => {
            return Err(ApiError(
                CoreError::NotFound(format!("image kind `{other}`")).into(),
            ))
        }
    };
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Deserialize)]
struct HeatmapQuery {
    method: String,
    channel: Option<String>,
    variant: Option<String>,
    normalization: Option<Normalization>,
}

impl HeatmapQuery {
    fn parse(&self) -> ApiResult<(Attribution, VariantTag, Normalization)> {
        let method = Attribution::parse(&self.method, self.channel.as_deref())?;
        Ok((
            method,
            parse_variant(self.variant.as_deref())?,
            self.normalization.unwrap_or(Normalization::PerImage),
        ))
    }
}

/// Native-resolution values plus an image-size colorized PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapView {
    pub id: InstanceId,
    pub variant: VariantTag,
    pub method: Attribution,
    pub heatmap: Heatmap,
    pub png: String,
}

/// The per-instance map the API serves. Occlusion deltas are always raw
/// meters; the other methods honor `norm`.
pub fn instance_heatmap(
    s: &Session,
    id: InstanceId,
    variant: &VariantTag,
    method: Attribution,
    norm: Normalization,
) -> ServiceResult<HeatmapView> {
    let model = s.model(variant)?;
    let item = s.item(id)?;
    let filtered;
    let item = match variant {
        VariantTag::Filtered(fid) => {
            filtered = PairedItem {
                real: apply_filters(&item.real, s.filter(fid)?),
                ..item.clone()
            };
            &filtered
        }
        _ => item,
    };
    let heatmap = attribute(model, item, method, norm)?;
    let image = match method {
        Attribution::Occlusion { .. } => {
            heatmap.resample(item.real.width(), item.real.height(), Interp::Nearest)
        }
        _ => attribute_image(model, item, method, norm)?,
    };
    let png = B64.encode(colorize_heatmap(&image).to_png()?);
    Ok(HeatmapView {
        id,
        variant: variant.clone(),
        method,
        heatmap,
        png,
    })
}

async fn get_heatmap(
    State(st): AppRef,
    Path(id): Path<InstanceId>,
    q: Result<Query<HeatmapQuery>, QueryRejection>,
) -> ApiResult<Json<HeatmapView>> {
    let Query(q) = q?;
    let (method, v, norm) = q.parse()?;
    let snap = st.snapshot();
    Ok(Json(
        blocking(move || instance_heatmap(&snap, id, &v, method, norm)).await?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoMapView {
    pub metadata: GridMetadata,
    /// Row-major, `blocks × blocks`, row 0 at the extent's minimum y.
    pub values: Vec<f64>,
    pub counts: Vec<u32>,
    /// North-up colorized PNG, base64.
    pub png: String,
}

impl GeoMapView {
    pub fn of(grid: &GeoGrid) -> ServiceResult<Self> {
        Ok(Self {
            metadata: grid.metadata(),
            values: grid.values.clone(),
            counts: grid.counts.clone(),
            png: B64.encode(colorize_grid(grid).to_png()?),
        })
    }
}

async fn get_instance_geomap(
    State(st): AppRef,
    Path(id): Path<InstanceId>,
    q: Result<Query<HeatmapQuery>, QueryRejection>,
) -> ApiResult<Json<GeoMapView>> {
    let Query(q) = q?;
    let (method, v, norm) = q.parse()?;
    let snap = st.snapshot();
    let view = blocking(move || {
        let item = snap.item(id)?;
        let h = attribute_image(snap.model(&v)?, item, method, norm)?;
        let ds = snap.dataset()?;
        let grid = backproject(
            &h,
            method.geometry(item),
            &GeoGrid::for_scene(&ds.scene_sim),
            default_downsample(&ds.camera),
        )?;
        GeoMapView::of(&grid.normalize())
    })
    .await?;
    Ok(Json(view))
}

async fn post_predict(
    State(st): AppRef,
    Path(id): Path<InstanceId>,
    q: Result<Query<VariantQuery>, QueryRejection>,
    body: Result<Json<FilterConfig>, JsonRejection>,
) -> ApiResult<Json<PredictionRecord>> {
    let (Query(q), Json(filter)) = (q?, body?);
    filter.validate()?;
    let v = parse_variant(q.variant.as_deref())?;
    let snap = st.snapshot();
    let rec = blocking(move || {
        let model = snap.model(&v)?;
        let it = snap.item(id)?;
        let sim = model.predict(&it.sim)?;
        let real = model.predict(&apply_filters(&it.real, &filter))?;
        Ok(PredictionRecord::build(
            id,
            it.pose,
            sim,
            real,
            &snap.dataset()?.scene_sim,
        ))
    })
    .await?;
    Ok(Json(rec))
}

#[derive(Debug, Deserialize)]
struct FilterQuery {
    base: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRegistered {
    pub variant: VariantTag,
    pub base: VariantTag,
    pub summary: Summary,
}

async fn post_filter(
    State(st): AppRef,
    q: Result<Query<FilterQuery>, QueryRejection>,
    body: Result<Json<FilterConfig>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<FilterRegistered>)> {
    let (Query(q), Json(filter)) = (q?, body?);
    filter.validate()?;
    let base = parse_variant(q.base.as_deref())?;
    if base.is_filtered() {
        return Err(bad_request("a filter's base must be a trained variant"));
    }
    st.snapshot().model(&base)?;
    let variant = filter.variant();
    let b = base.clone();
    let recs = st.mutate(move |s| s.add_filter(filter, &b)).await?;
    Ok((
        StatusCode::CREATED,
        Json(FilterRegistered {
            variant,
            base,
            summary: summarize(&recs),
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct GeomapQuery {
    variant: Option<String>,
    method: Option<String>,
    channel: Option<String>,
    strategy: Option<String>,
    selection: Option<String>,
}

async fn get_geomap(
    State(st): AppRef,
    q: Result<Query<GeomapQuery>, QueryRejection>,
) -> ApiResult<Json<GeoMapView>> {
    let Query(q) = q?;
    let v = parse_variant(q.variant.as_deref())?;
    let method = Attribution::parse(
        q.method.as_deref().unwrap_or("feature_distance"),
        q.channel.as_deref(),
    )?;
    let strategy: AggregationStrategy = q.strategy.as_deref().unwrap_or("SUM").parse()?;
    let snap = st.snapshot();
    let ids = match &q.selection {
        Some(name) => {
            let (_, recs) = st.records(&v).await?;
            Some(snap.evaluate_selection(&SelectionExpr::Saved { name: name.clone() }, &recs)?)
        }
        None => None,
    };
    let view = blocking(move || {
        let grid = session_geomap(&snap, &v, method, strategy, ids.as_ref())?;
        GeoMapView::of(&grid)
    })
    .await?;
    Ok(Json(view))
}

/// Dataset-level geo-map for a variant; filtered variants see their
/// filter applied to the real frames.
pub fn session_geomap(
    s: &Session,
    variant: &VariantTag,
    method: Attribution,
    strategy: AggregationStrategy,
    selection: Option<&SelectionSet>,
) -> ServiceResult<GeoGrid> {
    let model = s.model(variant)?;
    let ds = s.dataset()?;
    let filtered;
    let ds = match variant {
        VariantTag::Filtered(id) => {
            let f = s.filter(id)?;
            let mut d = (**ds).clone();
            for it in &mut d.items {
                it.real = apply_filters(&it.real, f);
            }
            filtered = d;
            &filtered
        }
        _ => &**ds,
    };
    let ids: Option<Vec<InstanceId>> = selection.map(|sel| sel.ids.iter().copied().collect());
    Ok(geomap(
        model,
        ds,
        ids.as_deref(),
        method,
        strategy,
        &GeoGrid::for_scene(&ds.scene_sim),
    )?)
}

async fn get_projection(
    State(st): AppRef,
    q: Result<Query<VariantQuery>, QueryRejection>,
) -> ApiResult<Json<EmbeddingProjection>> {
    let Query(q) = q?;
    let v = parse_variant(q.variant.as_deref())?;
    let (_, recs) = st.records(&v).await?;
    Ok(Json(
        blocking(move || Ok(project_embeddings(&recs)?)).await?,
    ))
}

#[derive(Debug, Deserialize)]
struct HistogramQuery {
    variant: Option<String>,
    selection: Option<String>,
    source: Option<PoseSource>,
    bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub rooms: BTreeMap<String, usize>,
    /// Equal sectors over `[0, 2π)` starting at angle 0.
    pub orientation: Vec<usize>,
}

async fn get_histogram(
    State(st): AppRef,
    q: Result<Query<HistogramQuery>, QueryRejection>,
) -> ApiResult<Json<Histograms>> {
    let Query(q) = q?;
    let v = parse_variant(q.variant.as_deref())?;
    let (snap, recs) = st.records(&v).await?;
    let sel = match &q.selection {
        Some(name) => {
            Some(snap.evaluate_selection(&SelectionExpr::Saved { name: name.clone() }, &recs)?)
        }
        None => None,
    };
    let source = q.source.unwrap_or(PoseSource::Gt);
    let scene = &snap.dataset()?.scene_sim;
    Ok(Json(Histograms {
        rooms: room_histogram(&recs, sel.as_ref(), scene, source),
        orientation: orientation_histogram(&recs, sel.as_ref(), q.bins.unwrap_or(12), source)?,
    }))
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(session: Session, addr: std::net::SocketAddr) -> ServiceResult<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(session)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
