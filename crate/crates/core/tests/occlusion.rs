use gapscope_core::analysis::{occlusion_map, OcclusionChannel, PatchGrid};
use gapscope_core::model::{Architecture, ModelParams, VariantTag};
use gapscope_core::sim::{
    generate_paired_dataset, presets, CameraSpec, Footprint, Object, Perturbation,
};

mod common;

#[test]
fn engine_matches_naive_rebuild_bit_exact() {
    let gap = [
        Perturbation::BrightnessShift { shift: -0.2 },
        Perturbation::AddObject {
            object: Object {
                id: "crate".into(),
                footprint: Footprint::Rect {
                    min: [9.0, 9.5],
                    max: [10.0, 10.5],
                },
                height_frac: 0.5,
                color: [200, 40, 40],
            },
        },
        Perturbation::DepthNoise {
            stddev: 0.05,
            seed: 1,
        },
    ];
    let cam = CameraSpec::default();
    let ds = generate_paired_dataset(&presets::default_scene(), &gap, &cam, 20, 0.3, 5).unwrap();
    let model = ModelParams::init(
        Architecture::desk(64, 64, [22.0, 22.0]),
        VariantTag::Vanilla,
        8,
        0.3,
        10.0,
    )
    .unwrap();
    let grid = PatchGrid::for_camera(&cam);
    let mut nonzero = 0;
    for it in &ds.items {
        for ch in [
            OcclusionChannel::Rgb,
            OcclusionChannel::Depth,
            OcclusionChannel::Both,
        ] {
            let engine = occlusion_map(&model, &it.real, &it.sim, &it.pose, ch, grid).unwrap();
            let naive = common::naive_occlusion(&model, &it.real, &it.sim, &it.pose, ch, grid);
            assert_eq!(
                engine.values, naive.values,
                "instance {} channel {ch:?}",
                it.id
            );
            nonzero += engine.values.iter().filter(|v| **v != 0.0).count();
        }
    }
    assert!(nonzero > 0, "fixture produced no occlusion signal");
}

#[test]
fn identical_pairs_are_all_zero() {
    let cam = CameraSpec::default();
    let ds = generate_paired_dataset(&presets::default_scene(), &[], &cam, 25, 0.3, 6).unwrap();
    let model = ModelParams::init(
        Architecture::desk(64, 64, [22.0, 22.0]),
        VariantTag::Vanilla,
        9,
        0.3,
        10.0,
    )
    .unwrap();
    for it in &ds.items {
        for ch in [OcclusionChannel::Rgb, OcclusionChannel::Depth] {
            let h = occlusion_map(
                &model,
                &it.real,
                &it.sim,
                &it.pose,
                ch,
                PatchGrid::for_camera(&cam),
            )
            .unwrap();
            assert!(h.values.iter().all(|v| *v == 0.0));
        }
    }
}
