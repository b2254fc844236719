use std::fmt::Write as _;
use std::path::Path;
use std::sync::mpsc::sync_channel;

use nalgebra::Point3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::detector::{detector_intrinsics, sample_detections};
use super::render::{camera_at, frame_count, frame_time, object_position, render_frame_for};
use super::scenario::{FusionConfig, Scenario};
use super::SimError;
use crate::fusion::io::{grid_to_csv, poses_to_csv, PoseRecord};
use crate::fusion::{
    log_odds, relative_fidelity, update_from_frame, CameraIntrinsics, CameraModel, Detection, SensorModel,
    SensorModelParams, VoxelGrid,
};
use crate::salient::{salient_locations, salient_report, salient_to_csv, SalientLocation};

/// Frames buffered between the detection producer and the fusion consumer.
const PIPELINE_DEPTH: usize = 8;

/// Grid state after each fused frame, for observers.
pub struct FrameState<'a> {
    pub index: usize,
    pub t: f64,
    pub grid: &'a VoxelGrid,
    pub objects: &'a [Point3<f64>],
    /// Cells above the extraction threshold.
    pub above_threshold: usize,
    /// Of those, cells farther than the trail radius from every object.
    pub trail_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchRecord {
    pub salient: usize,
    pub object: usize,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub seed: u64,
    pub config_hash: String,
    pub frames: usize,
    pub detections: usize,
    pub salient: Vec<SalientLocation>,
    /// Object positions at the end of the run.
    pub objects: Vec<Point3<f64>>,
    pub matches: Vec<MatchRecord>,
    pub missed: Vec<usize>,
    pub false_locations: Vec<usize>,
    pub mean_error: Option<f64>,
    pub mean_probability: Option<f64>,
    /// Trail cells summed over frames.
    pub trail_cell_frames: usize,
    pub grid: VoxelGrid,
    pub poses: Vec<PoseRecord>,
    /// The scenario as replayed, with the effective fusion settings.
    pub scenario: Scenario,
}

struct Packet {
    index: usize,
    t: f64,
    camera: CameraModel,
    objects: Vec<Point3<f64>>,
    detections: Vec<(usize, Vec<Detection>)>,
}

/// SHA-256 of the replayed scenario, settings included.
pub fn config_hash(scenario: &Scenario, config: &FusionConfig) -> String {
    let mut s = scenario.clone();
    s.fusion = config.clone();
    hex::encode(Sha256::digest(s.to_toml().as_bytes()))
}

/// Greedy nearest-neighbor matching: pairs within `gate` are taken in
/// ascending distance, each salient location and object at most once.
/// Returns (matches, unmatched objects, unmatched locations).
pub fn match_locations(
    salient: &[Point3<f64>],
    objects: &[Point3<f64>],
    gate: f64,
) -> (Vec<MatchRecord>, Vec<usize>, Vec<usize>) {
    let mut pairs = Vec::new();
    for (s, p) in salient.iter().enumerate() {
        for (o, q) in objects.iter().enumerate() {
            let d = (p - q).norm();
            if d <= gate {
                pairs.push(MatchRecord { salient: s, object: o, error: d });
            }
        }
    }
    pairs.sort_by(|a, b| a.error.total_cmp(&b.error).then(a.salient.cmp(&b.salient)).then(a.object.cmp(&b.object)));
    let mut s_used = vec![false; salient.len()];
    let mut o_used = vec![false; objects.len()];
    let mut matches = Vec::new();
    for m in pairs {
        if !s_used[m.salient] && !o_used[m.object] {
            s_used[m.salient] = true;
            o_used[m.object] = true;
            matches.push(m);
        }
    }
    let missed = (0..objects.len()).filter(|&o| !o_used[o]).collect();
    let false_locations = (0..salient.len()).filter(|&s| !s_used[s]).collect();
    (matches, missed, false_locations)
}

pub fn run_experiment(scenario: &Scenario, config: &FusionConfig) -> Result<Report, SimError> {
    replay(scenario, config, &mut |_| {})
}

/// Replays the scenario: a producer thread renders frames and samples each
/// scheduled detector; the calling thread fuses them in frame order.
pub fn replay(
    scenario: &Scenario,
    config: &FusionConfig,
    observer: &mut dyn FnMut(&FrameState),
) -> Result<Report, SimError> {
    scenario.validate()?;
    config.validate()?;
    let pool: Vec<f64> = scenario.detectors.iter().map(|d| d.accuracy).collect();
    let models: Vec<SensorModel> = scenario
        .detectors
        .iter()
        .map(|d| {
            let rel = config.p_det_rel.or(d.p_det_rel).unwrap_or_else(|| relative_fidelity(d.accuracy, &pool));
            let params =
                SensorModelParams { p_det_rel: rel, p_positive_max: config.p_positive_max, p_negative_max: config.p_negative_max };
            SensorModel { class: scenario.class.clone(), params, min_pixel_extent: config.min_pixel_extent }
        })
        .collect();
    let intrinsics: Vec<CameraIntrinsics> =
        scenario.detectors.iter().map(|d| detector_intrinsics(&scenario.camera, d)).collect();
    let mut grid = VoxelGrid::with_clamp(scenario.terrain.clone(), config.resolution, (-config.clamp, config.clamp))?;
    let n_frames = frame_count(scenario);
    let threshold_l = log_odds(config.threshold);

    let mut poses = Vec::with_capacity(n_frames);
    let mut detections = 0usize;
    let mut trail_cell_frames = 0usize;
    let mut last_objects = (0..scenario.objects.len()).map(|i| object_position(scenario, i, 0.0)).collect::<Vec<_>>();

    std::thread::scope(|scope| -> Result<(), SimError> {
        let (tx, rx) = sync_channel::<Result<Packet, SimError>>(PIPELINE_DEPTH);
        let intrinsics = &intrinsics;
        scope.spawn(move || {
            let mut rngs: Vec<ChaCha8Rng> = (0..scenario.detectors.len())
                .map(|i| ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64 + 1)))
                .collect();
            for k in 0..n_frames {
                let t = frame_time(scenario, k);
                let packet = (|| -> Result<Packet, SimError> {
                    let camera = camera_at(scenario, t)?;
                    let objects = (0..scenario.objects.len()).map(|i| object_position(scenario, i, t)).collect();
                    let mut per = Vec::new();
                    for (i, spec) in scenario.detectors.iter().enumerate() {
                        let k32 = k as u64;
                        if k32 < spec.offset as u64 || (k32 - spec.offset as u64) % spec.period as u64 != 0 {
                            continue;
                        }
                        let frame = render_frame_for(scenario, t, &intrinsics[i])?;
                        let dets =
                            sample_detections(spec, &frame.projections, &intrinsics[i], t, spec.quality, &mut rngs[i]);
                        per.push((i, dets));
                    }
                    Ok(Packet { index: k, t, camera, objects, detections: per })
                })();
                let failed = packet.is_err();
                if tx.send(packet).is_err() || failed {
                    return;
                }
            }
        });
        for msg in rx {
            let packet = msg?;
            let q = packet.camera.orientation;
            poses.push(PoseRecord { t: packet.t, position: packet.camera.position, orientation: q });
            for (i, dets) in &packet.detections {
                let cam = CameraModel { intrinsics: intrinsics[*i], ..packet.camera.clone() };
                update_from_frame(&mut grid, dets, &cam, &models[*i])?;
                detections += dets.len();
            }
            let mut above = 0;
            let mut trail = 0;
            for (idx, cell) in grid.cells() {
                if cell.log_odds > threshold_l {
                    above += 1;
                    let c = grid.center(idx);
                    let near = packet.objects.iter().any(|o| (o.x - c.x).hypot(o.y - c.y) <= config.trail_radius);
                    if !near {
                        trail += 1;
                    }
                }
            }
            trail_cell_frames += trail;
            observer(&FrameState {
                index: packet.index,
                t: packet.t,
                grid: &grid,
                objects: &packet.objects,
                above_threshold: above,
                trail_cells: trail,
            });
            last_objects = packet.objects;
        }
        Ok(())
    })?;

    let salient = salient_locations(&grid, config.threshold, config.link_distance)?;
    let positions: Vec<Point3<f64>> = salient.iter().map(|s| s.position).collect();
    let (matches, missed, false_locations) = match_locations(&positions, &last_objects, config.match_gate);
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let mut effective = scenario.clone();
    effective.fusion = config.clone();
    Ok(Report {
        seed: scenario.seed,
        config_hash: config_hash(scenario, config),
        frames: n_frames,
        detections,
        mean_error: mean(matches.iter().map(|m| m.error).collect()),
        mean_probability: mean(salient.iter().map(|s| s.probability).collect()),
        salient,
        objects: last_objects,
        matches,
        missed,
        false_locations,
        trail_cell_frames,
        grid,
        poses,
        scenario: effective,
    })
}

fn errors_csv(r: &Report) -> String {
    let mut s = String::from("kind,salient,object,x,y,z,error\n");
    for m in &r.matches {
        let p = r.salient[m.salient].position;
        writeln!(s, "match,{},{},{},{},{},{}", m.salient, m.object, p.x, p.y, p.z, m.error).unwrap();
    }
    for &i in &r.false_locations {
        let p = r.salient[i].position;
        writeln!(s, "false_location,{i},,{},{},{},", p.x, p.y, p.z).unwrap();
    }
    for &o in &r.missed {
        let p = r.objects[o];
        writeln!(s, "missed,,{o},{},{},{},", p.x, p.y, p.z).unwrap();
    }
    s
}

fn summary(r: &Report) -> String {
    let mut s = salient_report(&r.salient);
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    writeln!(s, "frames: {}", r.frames).unwrap();
    writeln!(s, "detections: {}", r.detections).unwrap();
    writeln!(s, "matched objects: {} of {}", r.matches.len(), r.objects.len()).unwrap();
    writeln!(s, "missed objects: {}", r.missed.len()).unwrap();
    writeln!(s, "false locations: {}", r.false_locations.len()).unwrap();
    writeln!(s, "mean geolocation error: {}", fmt(r.mean_error)).unwrap();
    writeln!(s, "mean salient probability: {}", fmt(r.mean_probability)).unwrap();
    writeln!(s, "trail cell-frames: {}", r.trail_cell_frames).unwrap();
    s
}

/// Writes salient.csv, errors.csv, grid.csv, poses.csv, scenario.toml,
/// report.txt and manifest.toml into `dir`.
pub fn write_report(r: &Report, dir: &Path) -> Result<(), SimError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("salient.csv"), salient_to_csv(&r.salient))?;
    std::fs::write(dir.join("errors.csv"), errors_csv(r))?;
    std::fs::write(dir.join("grid.csv"), grid_to_csv(&r.grid))?;
    std::fs::write(dir.join("poses.csv"), poses_to_csv(&r.poses))?;
    std::fs::write(dir.join("scenario.toml"), r.scenario.to_toml())?;
    std::fs::write(dir.join("report.txt"), summary(r))?;
    let manifest = format!(
        "seed = {}\nconfig_sha256 = \"{}\"\nframes = {}\ndetections = {}\ntool_version = \"{}\"\n",
        r.seed,
        r.config_hash,
        r.frames,
        r.detections,
        env!("CARGO_PKG_VERSION")
    );
    std::fs::write(dir.join("manifest.toml"), manifest)?;
    Ok(())
}
