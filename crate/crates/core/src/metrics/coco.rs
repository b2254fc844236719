use super::boxes::{AreaRange, BoundingBox};
use super::matching::{check_tau, match_with_ignore, score_order};
use super::{ImageSample, MetricsError};

/// Number of fixed recall sample points of the interpolated AP.
pub const RECALL_POINTS: usize = 101;

/// IoU thresholds 0.50, 0.55, .., 0.95.
pub fn coco_iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| 0.5 + 0.05 * i as f64)
}

/// The recall value sampled at point `i` of [`RECALL_POINTS`].
pub fn recall_point(i: usize) -> f64 {
    i as f64 / (RECALL_POINTS - 1) as f64
}

/// Evaluation setting for one AP/AR number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub iou: f64,
    pub max_det: usize,
    pub area: AreaRange,
}

impl EvalParams {
    pub fn new(iou: f64) -> Self {
        EvalParams {
            iou,
            max_det: 100,
            area: AreaRange::All,
        }
    }

    pub fn max_det(mut self, max_det: usize) -> Self {
        self.max_det = max_det;
        self
    }

    pub fn area(mut self, area: AreaRange) -> Self {
        self.area = area;
        self
    }
}

/// Detections pooled over all images for one evaluation setting.
#[derive(Debug, Clone)]
pub(crate) struct PooledCurve {
    /// `(score, is_tp)` for every non-ignored detection, in pooled score order.
    pub ranked: Vec<(f64, bool)>,
    /// Ground truths that count towards recall.
    pub n_positives: usize,
}

impl PooledCurve {
    /// Cumulative `(recall, precision)` after each ranked detection.
    pub fn pr_points(&self) -> Vec<(f64, f64)> {
        let mut tp = 0usize;
        let mut fp = 0usize;
        self.ranked
            .iter()
            .map(|&(_, is_tp)| {
                if is_tp {
                    tp += 1;
                } else {
                    fp += 1;
                }
                (
                    tp as f64 / self.n_positives as f64,
                    tp as f64 / (tp + fp) as f64,
                )
            })
            .collect()
    }

    pub fn final_recall(&self) -> f64 {
        let tp = self.ranked.iter().filter(|r| r.1).count();
        tp as f64 / self.n_positives as f64
    }
}

pub(crate) fn pool(images: &[ImageSample], p: &EvalParams) -> Result<PooledCurve, MetricsError> {
    check_tau(p.iou)?;
    if p.max_det == 0 {
        return Err(MetricsError::InvalidMaxDet);
    }
    let mut entries: Vec<(f64, bool)> = Vec::new();
    let mut n_positives = 0;
    for img in images {
        let gt_ignore: Vec<bool> = img.gts.iter().map(|g| !p.area.admits(g)).collect();
        n_positives += gt_ignore.iter().filter(|&&ig| !ig).count();

        let mut order = score_order(&img.dts)?;
        order.truncate(p.max_det);
        let dt_out: Vec<bool> = img.dts.iter().map(|d| !p.area.admits(d)).collect();
        let m = match_with_ignore(&img.gts, &gt_ignore, &img.dts, &dt_out, &order, p.iou)?;
        for &d in &m.order {
            if m.dt_ignored[d] {
                continue;
            }
            entries.push((img.dts[d].score_or_err()?, m.dt_match[d].is_some()));
        }
    }
    if n_positives == 0 {
        return Err(MetricsError::NoGroundTruth);
    }
    // stable: ties keep image order, then per-image rank
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(PooledCurve {
        ranked: entries,
        n_positives,
    })
}

/// 101-point interpolated average precision for one setting.
///
/// The precision at each sampled recall `r` is the maximum precision reached
/// at any recall ≥ `r`; unreachable recall levels contribute zero.
pub fn average_precision_with(images: &[ImageSample], p: &EvalParams) -> Result<f64, MetricsError> {
    let curve = pool(images, p)?;
    let pts = curve.pr_points();
    let mut envelope: Vec<f64> = pts.iter().map(|&(_, pr)| pr).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut sum = 0.0;
    for k in 0..RECALL_POINTS {
        let r = recall_point(k);
        // recall is non-decreasing, so the first index reaching r is a lower bound
        let idx = pts.partition_point(|&(rc, _)| rc < r);
        if idx < pts.len() {
            sum += envelope[idx];
        }
    }
    Ok(sum / RECALL_POINTS as f64)
}

/// AP at a single IoU threshold, all areas, at most 100 detections per image.
pub fn average_precision(images: &[ImageSample], tau: f64) -> Result<f64, MetricsError> {
    average_precision_with(images, &EvalParams::new(tau))
}

/// AP averaged over the ten COCO IoU thresholds.
pub fn average_precision_coco(
    images: &[ImageSample],
    max_det: usize,
    area: AreaRange,
) -> Result<f64, MetricsError> {
    let ths = coco_iou_thresholds();
    let mut sum = 0.0;
    for t in ths {
        sum += average_precision_with(images, &EvalParams::new(t).max_det(max_det).area(area))?;
    }
    Ok(sum / ths.len() as f64)
}

/// Recall at one setting: matched positives over all positives.
pub fn recall_at(images: &[ImageSample], p: &EvalParams) -> Result<f64, MetricsError> {
    Ok(pool(images, p)?.final_recall())
}

/// Average recall over the ten COCO IoU thresholds, keeping at most
/// `max_det` top-scoring detections per image. The mean of the sampled
/// recalls approximates twice the area under the recall-IoU curve on
/// `[0.5, 1]`.
pub fn average_recall(
    images: &[ImageSample],
    max_det: usize,
    area: AreaRange,
) -> Result<f64, MetricsError> {
    let ths = coco_iou_thresholds();
    let mut sum = 0.0;
    for t in ths {
        sum += recall_at(images, &EvalParams::new(t).max_det(max_det).area(area))?;
    }
    Ok(sum / ths.len() as f64)
}

/// Single-image convenience wrapper.
pub fn single_image(gts: &[BoundingBox], dts: &[BoundingBox]) -> Vec<ImageSample> {
    vec![ImageSample {
        image_id: 0,
        gts: gts.to_vec(),
        dts: dts.to_vec(),
    }]
}
