use nalgebra::Point3;

use super::scenario::Scenario;
use super::SimError;
use crate::fusion::{projected_size, CameraIntrinsics, CameraModel};
use crate::metrics::BoundingBox;

/// Mission length, seconds.
pub fn duration(scenario: &Scenario) -> f64 {
    let t = &scenario.trajectory;
    if t.waypoints.len() == 1 {
        return t.duration.unwrap_or(0.0);
    }
    path_length(&t.waypoints) / t.speed
}

fn path_length(w: &[[f64; 2]]) -> f64 {
    w.windows(2).map(|s| ((s[1][0] - s[0][0]).powi(2) + (s[1][1] - s[0][1]).powi(2)).sqrt()).sum()
}

/// Number of processing frames: one at t = 0 and one every `1 / rate`.
pub fn frame_count(scenario: &Scenario) -> usize {
    (duration(scenario) * scenario.frame_rate + 1e-9).floor() as usize + 1
}

pub fn frame_time(scenario: &Scenario, k: usize) -> f64 {
    k as f64 / scenario.frame_rate
}

/// Camera pose at time `t`: constant speed along the waypoint polyline,
/// facing along the current segment, `altitude` above the terrain.
pub fn camera_at(scenario: &Scenario, t: f64) -> Result<CameraModel, SimError> {
    let total = duration(scenario);
    if !(t >= 0.0 && t <= total + 1e-9) {
        return Err(SimError::TimeOutOfRange { t, duration: total });
    }
    let tr = &scenario.trajectory;
    let (x, y, yaw) = if tr.waypoints.len() == 1 {
        (tr.waypoints[0][0], tr.waypoints[0][1], tr.heading_deg.to_radians())
    } else {
        let mut s = t * tr.speed;
        let mut out = None;
        let n = tr.waypoints.len();
        for (i, seg) in tr.waypoints.windows(2).enumerate() {
            let (dx, dy) = (seg[1][0] - seg[0][0], seg[1][1] - seg[0][1]);
            let len = (dx * dx + dy * dy).sqrt();
            if len == 0.0 {
                continue;
            }
            if s <= len || i == n - 2 {
                let f = (s / len).min(1.0);
                out = Some((seg[0][0] + f * dx, seg[0][1] + f * dy, dy.atan2(dx)));
                break;
            }
            s -= len;
        }
        out.ok_or_else(|| SimError::InvalidScenario("trajectory has zero length".into()))?
    };
    let z = scenario.terrain.height(x, y) + tr.altitude;
    Ok(CameraModel::from_heading(scenario.camera, Point3::new(x, y, z), yaw, tr.tilt_deg.to_radians()))
}

/// Ground point of an object at time `t`.
pub fn object_position(scenario: &Scenario, object: usize, t: f64) -> Point3<f64> {
    let o = &scenario.objects[object];
    let x = o.x + o.velocity[0] * t;
    let y = o.y + o.velocity[1] * t;
    Point3::new(x, y, scenario.terrain.height(x, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectProjection {
    pub object: usize,
    /// Ideal box, detector-input pixels, bottom center on the feet.
    pub bbox: BoundingBox,
    pub foot: Point3<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub t: f64,
    pub camera: CameraModel,
    pub projections: Vec<ObjectProjection>,
}

/// Ideal box of an object seen by a camera with the given intrinsics. Width
/// follows the footprint; height blends standing height and footprint by
/// the viewing elevation. `None` when the feet fall outside the image.
pub fn project_object(
    cam: &CameraModel,
    intrinsics: &CameraIntrinsics,
    foot: &Point3<f64>,
    width: f64,
    height: f64,
) -> Option<(BoundingBox, f64)> {
    let view = CameraModel { intrinsics: *intrinsics, ..cam.clone() };
    let (u, v, _) = view.project(foot)?;
    if !(u >= 0.0 && u < intrinsics.img_w_input && v > 0.0 && v <= intrinsics.img_h_input) {
        return None;
    }
    let d = (foot - cam.position).norm();
    let elev = ((cam.position.z - foot.z) / d).clamp(-1.0, 1.0).asin();
    let apparent_h = height * elev.cos() + width * elev.sin().abs();
    let (w_px, h_px) = projected_size(intrinsics, width, apparent_h, d);
    let x_min = (u - w_px / 2.0).max(0.0);
    let x_max = (u + w_px / 2.0).min(intrinsics.img_w_input);
    let y_min = (v - h_px).max(0.0);
    let b = BoundingBox::new(x_min, y_min, x_max, v).ok()?;
    Some((b, d))
}

fn line_of_sight(scenario: &Scenario, eye: &Point3<f64>, target: &Point3<f64>) -> bool {
    let d = target - eye;
    let len = d.norm();
    let steps = (len / 0.25).ceil() as usize;
    // stop short of the target so its own surface does not block it
    for i in 1..steps.saturating_sub(2) {
        let p = eye + d * (i as f64 / steps as f64);
        if p.z < scenario.terrain.height(p.x, p.y) - 1e-6 {
            return false;
        }
    }
    true
}

/// Pose at `t` and the ideal projections of every visible object, in the
/// camera's own input resolution.
pub fn render_frame(scenario: &Scenario, t: f64) -> Result<RenderedFrame, SimError> {
    render_frame_for(scenario, t, &scenario.camera)
}

/// As [`render_frame`], projecting into a detector's input resolution.
pub fn render_frame_for(scenario: &Scenario, t: f64, intrinsics: &CameraIntrinsics) -> Result<RenderedFrame, SimError> {
    let camera = camera_at(scenario, t)?;
    let mut projections = Vec::new();
    for (i, o) in scenario.objects.iter().enumerate() {
        let foot = object_position(scenario, i, t);
        if !scenario.terrain.extents.contains(foot.x, foot.y) {
            continue;
        }
        let Some((bbox, distance)) = project_object(&camera, intrinsics, &foot, o.width, o.height) else {
            continue;
        };
        if !line_of_sight(scenario, &camera.position, &foot) {
            continue;
        }
        projections.push(ObjectProjection { object: i, bbox, foot, distance });
    }
    Ok(RenderedFrame { t, camera, projections })
}
