use std::path::Path;
use std::process::{Command, Output};

use gapscope::Session;
use gapscope_core::analysis::{attribute, Attribution, Heatmap, Normalization, OcclusionChannel};
use gapscope_core::model::VariantTag;
use serde_json::Value;

const CONFIG: &str = r#"
[session]
id = "cli-test"

[camera]
width = 32
height = 32

[dataset]
n = 24
seed = 7

[training]
epochs = 2

[[scene.perturbations]]
kind = "REMOVE_OBJECT"
id = "plant"
"#;

fn gapscope(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapscope"))
        .arg("--config")
        .arg(dir.join("gapscope.toml"))
        .args(args)
        .env("GAPSCOPE_SESSION_DIR", dir.join("session"))
        .output()
        .unwrap()
}

fn ok_json(out: Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("gapscope.toml"), CONFIG).unwrap();
    dir
}

#[test]
fn dataset_generation_is_deterministic() {
    let dir = setup();
    let scenes = ok_json(gapscope(dir.path(), &["scene", "gen"]));
    assert_eq!(scenes["objects"], serde_json::json!([5, 4]));
    let a = ok_json(gapscope(
        dir.path(),
        &["dataset", "gen", "--n", "16", "--seed", "7"],
    ));
    let b = ok_json(gapscope(
        dir.path(),
        &["dataset", "gen", "--n", "16", "--seed", "7"],
    ));
    assert_eq!(a["hash"], b["hash"]);
    assert_eq!(a["len"], 16);
    let c = ok_json(gapscope(
        dir.path(),
        &["dataset", "gen", "--n", "16", "--seed", "8"],
    ));
    assert_ne!(a["hash"], c["hash"]);
    assert!(dir.path().join("session/session.json").exists());
}

#[test]
fn evaluate_attrib_and_export() {
    let dir = setup();
    ok_json(gapscope(dir.path(), &["dataset", "gen"]));
    let trained = ok_json(gapscope(dir.path(), &["train", "--variant", "vanilla"]));
    assert_eq!(trained["epochs"], 2);

    let eval = ok_json(gapscope(dir.path(), &["evaluate", "--variant", "vanilla"]));
    assert_eq!(eval["rows"], 24);
    let csv = std::fs::read_to_string(eval["csv"].as_str().unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 24);
    assert!(csv.starts_with("id,gt_x"));

    let png = dir.path().join("occ.png");
    let out = ok_json(gapscope(
        dir.path(),
        &[
            "attrib",
            "--method",
            "occlusion",
            "--instance",
            "5",
            "--channel",
            "rgb",
            "--png",
            png.to_str().unwrap(),
        ],
    ));
    let cli: Heatmap = serde_json::from_value(out).unwrap();
    let s = Session::open(dir.path().join("session")).unwrap();
    let lib = attribute(
        s.model(&VariantTag::Vanilla).unwrap(),
        s.item(5).unwrap(),
        Attribution::Occlusion {
            channel: OcclusionChannel::Rgb,
        },
        Normalization::None,
    )
    .unwrap();
    assert_eq!(cli, lib);
    assert!(lib.signed);
    assert_eq!(&std::fs::read(&png).unwrap()[1..4], b"PNG");

    let sel = ok_json(gapscope(
        dir.path(),
        &[
            "select",
            "--expr",
            r#"{"op":"percentile","key":"ERR_REAL","mode":"MAX","fraction":0.25}"#,
            "--save",
            "worst",
        ],
    ));
    assert_eq!(sel["ids"].as_array().unwrap().len(), 6);
    let out = dir.path().join("worst.csv");
    let exported = ok_json(gapscope(
        dir.path(),
        &[
            "export",
            "--variant",
            "vanilla",
            "--selection",
            "worst",
            "--out",
            out.to_str().unwrap(),
        ],
    ));
    assert_eq!(exported["rows"], 6);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 7);

    let geo = ok_json(gapscope(
        dir.path(),
        &[
            "geomap",
            "--method",
            "occlusion",
            "--strategy",
            "max",
            "--selection",
            "worst",
        ],
    ));
    assert_eq!(geo["metadata"]["strategy"], "MAX");
    assert!(Path::new(geo["png"].as_str().unwrap()).exists());
    assert!(Path::new(geo["tensor"].as_str().unwrap()).exists());

    let f = ok_json(gapscope(
        dir.path(),
        &["filter", "--id", "dim", "--brightness", "-0.1"],
    ));
    assert_eq!(f["variant"], "filtered:dim");
    let eval = ok_json(gapscope(
        dir.path(),
        &["evaluate", "--variant", "filtered:dim"],
    ));
    assert_eq!(eval["rows"], 24);
}

#[test]
fn failures_exit_nonzero_with_error_json() {
    let dir = setup();
    let out = gapscope(dir.path(), &["train", "--variant", "vanilla"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "SESSION");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("dataset"));

    ok_json(gapscope(dir.path(), &["dataset", "gen", "--n", "8"]));
    let out = gapscope(dir.path(), &["evaluate", "--variant", "data_aug"]);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "NOT_FOUND");

    std::fs::write(dir.path().join("gapscope.toml"), "[dataset]\nsize = 3\n").unwrap();
    let out = gapscope(dir.path(), &["scene", "gen"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "CONFIG");
}

#[test]
fn session_flag_overrides_environment() {
    let dir = setup();
    let other = dir.path().join("elsewhere");
    ok_json(gapscope(
        dir.path(),
        &["--session", other.to_str().unwrap(), "scene", "gen"],
    ));
    assert!(other.join("scenes/sim.json").exists());
    assert!(!dir.path().join("session").exists());
}
