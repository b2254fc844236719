use serde::{Deserialize, Serialize};

use super::camera::CameraIntrinsics;
use super::FusionError;

/// Probabilities are pulled into `[P_EPSILON, 1 - P_EPSILON]` before the
/// log-odds conversion.
pub const P_EPSILON: f64 = 1e-6;

/// Smallest bounding-box extent, in pixels, at which an object of minimum
/// size still counts as detectable.
pub const DEFAULT_MIN_PIXEL_EXTENT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificantPoint {
    BboxCenter,
    BboxBottomCenter,
}

/// Real-world size range of one object class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectClassSpec {
    pub class_id: u32,
    pub obj_w_min: f64,
    pub obj_w_max: f64,
    pub obj_h_min: f64,
    pub obj_h_max: f64,
    pub significant_point: SignificantPoint,
    pub tukey_alpha: f64,
}

impl ObjectClassSpec {
    /// A standing or sitting person seen from an elevated camera.
    pub fn person() -> Self {
        ObjectClassSpec {
            class_id: 1,
            obj_w_min: 0.3,
            obj_w_max: 1.0,
            obj_h_min: 0.6,
            obj_h_max: 2.6,
            significant_point: SignificantPoint::BboxBottomCenter,
            tukey_alpha: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        let ok = self.obj_w_min > 0.0
            && self.obj_w_min <= self.obj_w_max
            && self.obj_h_min > 0.0
            && self.obj_h_min <= self.obj_h_max
            && (0.0..=1.0).contains(&self.tukey_alpha);
        if ok {
            Ok(())
        } else {
            Err(FusionError::InvalidClass(format!("class {}: need 0 < min <= max and alpha in [0, 1]", self.class_id)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModelParams {
    pub p_det_rel: f64,
    pub p_positive_max: f64,
    pub p_negative_max: f64,
}

impl Default for SensorModelParams {
    fn default() -> Self {
        SensorModelParams { p_det_rel: 1.0, p_positive_max: 0.2, p_negative_max: 0.05 }
    }
}

impl SensorModelParams {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !(0.0..=1.0).contains(&self.p_det_rel)
            || !(0.0..=0.5).contains(&self.p_positive_max)
            || !(0.0..=0.5).contains(&self.p_negative_max)
        {
            return Err(FusionError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Expected bounding-box size range, detector-input pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BboxExtent {
    pub min_w: f64,
    pub max_w: f64,
    pub min_h: f64,
    pub max_h: f64,
}

fn extent(input: f64, f: f64, obj: f64, calib: f64, dist: f64) -> f64 {
    input * f * obj / (calib * dist)
}

/// Pixel width and height, in detector-input pixels, of an object of
/// `obj_w` x `obj_h` meters seen at `dist`.
pub fn projected_size(cam: &CameraIntrinsics, obj_w: f64, obj_h: f64, dist: f64) -> (f64, f64) {
    (
        extent(cam.img_w_input, cam.f_x, obj_w, cam.img_w_calib, dist),
        extent(cam.img_h_input, cam.f_y, obj_h, cam.img_h_calib, dist),
    )
}

pub fn expected_bbox_extent(
    class: &ObjectClassSpec,
    cam: &CameraIntrinsics,
    dist: f64,
) -> Result<BboxExtent, FusionError> {
    if !(dist > 0.0) {
        return Err(FusionError::InvalidDistance(dist));
    }
    let (min_w, min_h) = projected_size(cam, class.obj_w_min, class.obj_h_min, dist);
    let (max_w, max_h) = projected_size(cam, class.obj_w_max, class.obj_h_max, dist);
    Ok(BboxExtent { min_w, max_w, min_h, max_h })
}

/// Cosine-tapered window over `[lo, hi]`: 0 outside, 1 on the flat middle,
/// half-cosine tapers over `alpha / 2` of the width at each edge.
pub fn tukey_weight(x: f64, lo: f64, hi: f64, alpha: f64) -> f64 {
    if !(hi > lo) || x < lo || x > hi || x.is_nan() {
        return 0.0;
    }
    let r = (x - lo) / (hi - lo);
    let half = alpha / 2.0;
    let edge = r.min(1.0 - r);
    if edge >= half {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * edge / half).cos())
    }
}

/// Area component: geometric mean of the width and height windows.
pub fn area_factor(class: &ObjectClassSpec, cam: &CameraIntrinsics, bbox_w: f64, bbox_h: f64, dist: f64) -> Result<f64, FusionError> {
    let e = expected_bbox_extent(class, cam, dist)?;
    let ww = tukey_weight(bbox_w, e.min_w, e.max_w, class.tukey_alpha);
    let wh = tukey_weight(bbox_h, e.min_h, e.max_h, class.tukey_alpha);
    Ok((ww * wh).sqrt())
}

/// Distance at which the smaller minimum object dimension shrinks to
/// `min_pixels`.
pub fn max_distance(class: &ObjectClassSpec, cam: &CameraIntrinsics, min_pixels: f64) -> f64 {
    let dw = cam.img_w_input * cam.f_x * class.obj_w_min / (cam.img_w_calib * min_pixels);
    let dh = cam.img_h_input * cam.f_y * class.obj_h_min / (cam.img_h_calib * min_pixels);
    dw.min(dh)
}

/// `max(1 - dist / max_distance, 0)`.
pub fn distance_factor(dist: f64, max_distance: f64) -> f64 {
    if !(max_distance > 0.0) {
        return 0.0;
    }
    (1.0 - dist / max_distance).max(0.0).min(1.0)
}

pub fn positive_probability(p_area: f64, score: f64, params: &SensorModelParams) -> f64 {
    0.5 + p_area * params.p_det_rel * score * params.p_positive_max
}

pub fn negative_probability(p_distance: f64, params: &SensorModelParams) -> f64 {
    0.5 - p_distance * params.p_det_rel * params.p_negative_max
}

pub fn shrink(p: f64) -> f64 {
    p.clamp(P_EPSILON, 1.0 - P_EPSILON)
}

/// Detector accuracy normalized by the best accuracy of the pool.
pub fn relative_fidelity(accuracy: f64, pool: &[f64]) -> f64 {
    let best = pool.iter().copied().fold(accuracy, f64::max);
    if best > 0.0 {
        accuracy / best
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics { f_x: 1000.0, f_y: 1000.0, img_w_calib: 1000.0, img_h_calib: 800.0, img_w_input: 1000.0, img_h_input: 800.0 }
    }

    #[test]
    fn bbox_extent_substitution() {
        let mut c = ObjectClassSpec::person();
        c.obj_w_min = 0.5;
        let e = expected_bbox_extent(&c, &cam(), 10.0).unwrap();
        assert!((e.min_w - 50.0).abs() < 1e-12);
        let far = expected_bbox_extent(&c, &cam(), 20.0).unwrap();
        assert!((far.min_w - 25.0).abs() < 1e-12);
        let mut half = cam();
        half.img_w_input = 500.0;
        assert!((expected_bbox_extent(&c, &half, 10.0).unwrap().min_w - 25.0).abs() < 1e-12);
        assert_eq!(expected_bbox_extent(&c, &cam(), 0.0), Err(FusionError::InvalidDistance(0.0)));
    }

    #[test]
    fn tukey_shape() {
        assert_eq!(tukey_weight(15.0, 10.0, 20.0, 0.5), 1.0);
        assert_eq!(tukey_weight(9.99, 10.0, 20.0, 0.5), 0.0);
        assert_eq!(tukey_weight(20.01, 10.0, 20.0, 0.5), 0.0);
        assert_eq!(tukey_weight(10.0, 10.0, 20.0, 0.5), 0.0);
        assert_eq!(tukey_weight(10.0001, 10.0, 20.0, 0.0), 1.0);
        // halfway up the taper
        assert!((tukey_weight(11.25, 10.0, 20.0, 0.5) - 0.5).abs() < 1e-12);
        assert!(tukey_weight(11.0, 10.0, 20.0, 1.0) < tukey_weight(12.0, 10.0, 20.0, 1.0));
    }

    #[test]
    fn distance_factor_linear() {
        assert_eq!(distance_factor(40.0, 40.0), 0.0);
        assert_eq!(distance_factor(0.0, 40.0), 1.0);
        assert_eq!(distance_factor(20.0, 40.0), 0.5);
        assert_eq!(distance_factor(80.0, 40.0), 0.0);
        let c = ObjectClassSpec::person();
        // 0.3 m at 8 px with f = 1000
        assert!((max_distance(&c, &cam(), 8.0) - 37.5).abs() < 1e-12);
    }

    #[test]
    fn probabilities() {
        let p = SensorModelParams { p_det_rel: 1.0, p_positive_max: 0.5, p_negative_max: 0.5 };
        assert_eq!(positive_probability(1.0, 1.0, &p), 1.0);
        assert_eq!(shrink(1.0), 1.0 - P_EPSILON);
        assert_eq!(negative_probability(1.0, &p), 0.0);
        assert_eq!(positive_probability(0.0, 1.0, &p), 0.5);
        assert_eq!(relative_fidelity(0.49, &[0.98, 0.7]), 0.5);
        assert!(SensorModelParams { p_det_rel: 1.0, p_positive_max: 0.6, p_negative_max: 0.1 }.validate().is_err());
    }
}
