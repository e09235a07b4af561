#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use gapscope::api::{router, AppState};
use gapscope::{Config, Session};
use gapscope_core::model::VariantTag;
use gapscope_core::sim::{CameraSpec, Perturbation};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

/// 32×32 frames, a handful of pairs and a two-epoch model: enough to
/// exercise every code path in seconds.
pub fn small_config(perturbations: Vec<Perturbation>) -> Config {
    let mut cfg = Config {
        camera: CameraSpec {
            width: 32,
            height: 32,
            ..CameraSpec::default()
        },
        ..Config::default()
    };
    cfg.dataset.n = 40;
    cfg.training.epochs = 2;
    cfg.scene.perturbations = perturbations;
    cfg
}

pub fn gap_perturbations() -> Vec<Perturbation> {
    vec![
        Perturbation::RemoveObject { id: "table".into() },
        Perturbation::BrightnessShift { shift: -0.2 },
    ]
}

pub fn trained_session(dir: &Path, perturbations: Vec<Perturbation>) -> Session {
    let mut s = Session::open_or_create(dir, Some(small_config(perturbations))).unwrap();
    s.gen_dataset(None, None).unwrap();
    s.train(&VariantTag::Vanilla, None).unwrap();
    s
}

pub fn app(session: Session) -> (Router, Arc<AppState>) {
    let state = AppState::new(session);
    (router(state.clone()), state)
}

pub async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, bytes) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

pub async fn post(app: &Router, uri: &str, body: &Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(serde_json::to_vec(body).unwrap()))
        .unwrap();
    let (status, bytes) = send(app, req).await;
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

pub fn error_code(body: &Value) -> &str {
    body["error"]["code"].as_str().unwrap_or("")
}
