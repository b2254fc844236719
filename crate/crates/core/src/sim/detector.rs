use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::render::ObjectProjection;
use super::scenario::SyntheticDetectorSpec;
use crate::fusion::{CameraIntrinsics, Detection};
use crate::metrics::BoundingBox;

/// Intrinsics as seen by a detector (its own input resolution).
pub fn detector_intrinsics(camera: &CameraIntrinsics, spec: &SyntheticDetectorSpec) -> CameraIntrinsics {
    match spec.input_size {
        Some([w, h]) => CameraIntrinsics { img_w_input: w, img_h_input: h, ..*camera },
        None => *camera,
    }
}

fn normal(mean: f64, std: f64, rng: &mut impl Rng) -> f64 {
    if std > 0.0 {
        Normal::new(mean, std).expect("std checked").sample(rng)
    } else {
        mean
    }
}

fn clip_box(cx: f64, bottom: f64, w: f64, h: f64, k: &CameraIntrinsics) -> Option<BoundingBox> {
    let x_min = (cx - w / 2.0).max(0.0);
    let x_max = (cx + w / 2.0).min(k.img_w_input);
    let y_max = bottom.min(k.img_h_input);
    let y_min = (bottom - h).max(0.0);
    if x_max - x_min <= 0.0 || y_max - y_min <= 0.0 {
        return None;
    }
    BoundingBox::new(x_min, y_min, x_max, y_max).ok()
}

/// One processed frame of a synthetic detector. Each projected object is
/// hit with the size-dependent rate scaled by `quality`; hits get center
/// and scale noise. False positives arrive as a Poisson count placed
/// uniformly. Boxes scoring under the cutoff are dropped.
pub fn sample_detections(
    spec: &SyntheticDetectorSpec,
    projections: &[ObjectProjection],
    intrinsics: &CameraIntrinsics,
    timestamp: f64,
    quality: f64,
    rng: &mut impl Rng,
) -> Vec<Detection> {
    let mut out = Vec::new();
    let push = |out: &mut Vec<Detection>, bbox: BoundingBox, score: f64| {
        let score = score.clamp(0.0, 1.0);
        if score >= spec.score_min {
            out.push(Detection { bbox, score, detector_id: spec.id.clone(), timestamp });
        }
    };
    for p in projections {
        let size = p.bbox.area().sqrt();
        let rate = (spec.tp_rate(size) * quality).clamp(0.0, 1.0);
        if !rng.random_bool(rate) {
            continue;
        }
        let (cx, _) = p.bbox.center();
        let du = normal(0.0, spec.center_noise_px, rng);
        let dv = normal(0.0, spec.center_noise_px, rng);
        let s = normal(1.0, spec.scale_noise, rng).max(0.1);
        let score = normal(spec.score_tp[0], spec.score_tp[1], rng);
        if let Some(b) = clip_box(cx + du, p.bbox.y_max + dv, p.bbox.width() * s, p.bbox.height() * s, intrinsics) {
            push(&mut out, b, score);
        }
    }
    if spec.fp_rate > 0.0 {
        let n = Poisson::new(spec.fp_rate).expect("rate checked").sample(rng) as usize;
        for _ in 0..n {
            let w = rng.random_range(4.0..0.15 * intrinsics.img_w_input);
            let h = rng.random_range(4.0..0.25 * intrinsics.img_h_input);
            let cx = rng.random_range(0.0..intrinsics.img_w_input);
            let bottom = rng.random_range(h..=intrinsics.img_h_input);
            let score = normal(spec.score_fp[0], spec.score_fp[1], rng);
            if let Some(b) = clip_box(cx, bottom, w, h, intrinsics) {
                push(&mut out, b, score);
            }
        }
    }
    out
}
