mod common;

use common::fixtures::{problem, scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use skit_core::allocation::assign_detectors;
use skit_core::sim::{
    apply_assignment, camera_at, frame_count, render_frame, replay, run_experiment, sample_detections, write_report,
    Scenario, SimError,
};

const SMALL: &str = r#"
seed = 3
frame_rate = 5.0

[camera]
f_x = 1000.0
f_y = 1000.0
img_w_calib = 1000.0
img_h_calib = 800.0
img_w_input = 1000.0
img_h_input = 800.0

[terrain]
extents = { x_min = 0.0, y_min = 0.0, x_max = 40.0, y_max = 40.0 }

[trajectory]
altitude = 15.0
speed = 2.0
tilt_deg = 90.0
waypoints = [[10.0, 20.0], [30.0, 20.0]]

[[objects]]
x = 20.0
y = 20.0
width = 0.5
height = 1.7

[[detectors]]
id = "ideal"
accuracy = 1.0
tp_small = 1.0
tp_medium = 1.0
tp_large = 1.0
fp_rate = 0.0
center_noise_px = 0.0
scale_noise = 0.0
score_tp = [0.9, 0.0]
"#;

fn small() -> Scenario {
    Scenario::from_toml(SMALL).unwrap()
}

#[test]
fn nadir_box_width() {
    let s = small();
    // halfway along the path the camera is straight above the object
    let f = render_frame(&s, 5.0).unwrap();
    assert_eq!(f.projections.len(), 1);
    let w = f.projections[0].bbox.width();
    assert!((w - 1000.0 * 0.5 / 15.0).abs() < 1e-6, "width {w}");
}

#[test]
fn poses_follow_waypoints() {
    let s = small();
    let start = camera_at(&s, 0.0).unwrap();
    assert_eq!((start.position.x, start.position.y, start.position.z), (10.0, 20.0, 15.0));
    let end = camera_at(&s, 10.0).unwrap();
    assert_eq!((end.position.x, end.position.y), (30.0, 20.0));
    assert_eq!(frame_count(&s), 51);
    assert!(matches!(camera_at(&s, 10.5), Err(SimError::TimeOutOfRange { .. })));
    assert!(matches!(camera_at(&s, -0.1), Err(SimError::TimeOutOfRange { .. })));
}

#[test]
fn objects_outside_the_view_are_absent() {
    let mut s = small();
    s.objects[0].y = 35.0;
    assert!(render_frame(&s, 5.0).unwrap().projections.is_empty());
}

#[test]
fn ideal_detector_reproduces_projections() {
    let s = small();
    let f = render_frame(&s, 5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dets = sample_detections(&s.detectors[0], &f.projections, &s.camera, 5.0, 1.0, &mut rng);
    assert_eq!(dets.len(), 1);
    let (a, b) = (&dets[0].bbox, &f.projections[0].bbox);
    for (x, y) in [(a.x_min, b.x_min), (a.y_min, b.y_min), (a.x_max, b.x_max), (a.y_max, b.y_max)] {
        assert!((x - y).abs() < 1e-9);
    }
    assert_eq!(dets[0].score, 0.9);

    let mut blind = s.detectors[0].clone();
    blind.tp_small = 0.0;
    blind.tp_medium = 0.0;
    blind.tp_large = 0.0;
    assert!(sample_detections(&blind, &f.projections, &s.camera, 5.0, 1.0, &mut rng).is_empty());
}

#[test]
fn ideal_run_locates_within_half_a_cell_diagonal() {
    let s = small();
    for res in [1.0, 0.5, 0.25] {
        let mut cfg = s.fusion.clone();
        cfg.resolution = res;
        let r = run_experiment(&s, &cfg).unwrap();
        assert_eq!(r.matches.len(), 1);
        assert!(r.matches[0].error <= res * std::f64::consts::SQRT_2 / 2.0, "{res}: {}", r.matches[0].error);
    }
}

#[test]
fn rendered_feet_ray_cast_back_to_their_cell() {
    let mut s = scenario("exp1.scenario");
    s.terrain.ridges.clear();
    s.terrain.slope = [0.0, 0.0];
    let grid = skit_core::fusion::VoxelGrid::new(s.terrain.clone(), 0.5).unwrap();
    let mut checked = 0;
    for k in (0..frame_count(&s)).step_by(10) {
        let f = render_frame(&s, k as f64 / s.frame_rate).unwrap();
        for p in &f.projections {
            let dir = f.camera.pixel_ray(p.bbox.center().0, p.bbox.y_max);
            let hit = grid.raycast(&f.camera.position, &dir).unwrap();
            let cell = grid.index_of(p.foot.x, p.foot.y).unwrap();
            assert!((hit.point - p.foot).norm() < 0.011);
            let (ox, oy) = grid.origin();
            let edge = |c: f64, o: f64| {
                let r = (c - o) / grid.resolution();
                (r - r.round()).abs() * grid.resolution()
            };
            // within the ray tolerance of a cell edge either side is fine
            if edge(p.foot.x, ox) > 0.011 && edge(p.foot.y, oy) > 0.011 {
                assert_eq!(hit.cell, cell);
            }
            checked += 1;
        }
    }
    assert!(checked > 20);
}

#[test]
fn reports_are_byte_identical() {
    let s = scenario("exp2.scenario");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_report(&run_experiment(&s, &s.fusion).unwrap(), a.path()).unwrap();
    write_report(&run_experiment(&s, &s.fusion).unwrap(), b.path()).unwrap();
    for name in ["salient.csv", "errors.csv", "grid.csv", "poses.csv", "scenario.toml", "report.txt", "manifest.toml"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn observer_sees_every_frame_in_order() {
    let s = scenario("exp2.scenario");
    let mut seen = Vec::new();
    let mut trail = 0;
    let r = replay(&s, &s.fusion, &mut |f| {
        seen.push(f.index);
        trail += f.trail_cells;
        assert!(f.trail_cells <= f.above_threshold);
    })
    .unwrap();
    assert_eq!(seen, (0..r.frames).collect::<Vec<_>>());
    assert_eq!(trail, r.trail_cell_frames);
}

#[test]
fn allocation_sets_rates_and_fidelity() {
    let s = scenario("exp5.scenario");
    let p = problem("exp5_gpu2.toml");
    let a = assign_detectors(&p, None).unwrap();
    let c = apply_assignment(&s, &p, a.assignment().unwrap(), 0).unwrap();
    assert_eq!(c.frame_rate, 10.0);
    assert_eq!(c.detectors.len(), 2);
    let offsets: Vec<u32> = c.detectors.iter().map(|d| d.offset).collect();
    assert!(c.detectors.iter().all(|d| d.period == 2 && d.profile() == "frcnn_irv2_lp"));
    assert_eq!(offsets, [0, 1]);
    assert!(c.detectors.iter().all(|d| d.p_det_rel == Some(1.0)));
    assert!(apply_assignment(&s, &p, a.assignment().unwrap(), 3).is_err());
}

#[test]
fn config_changes_change_the_hash() {
    let s = small();
    let a = run_experiment(&s, &s.fusion).unwrap();
    let mut cfg = s.fusion.clone();
    cfg.set("grid_res", "0.25").unwrap();
    let b = run_experiment(&s, &cfg).unwrap();
    assert_ne!(a.config_hash, b.config_hash);
    assert!(cfg.set("no_such_key", "1").is_err());
    assert!(cfg.set("threshold", "abc").is_err());
}
