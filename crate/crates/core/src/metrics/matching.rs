use serde::{Deserialize, Serialize};

use super::boxes::{iou, BoundingBox};
use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub gt: usize,
    pub dt: usize,
    pub iou: f64,
}

/// Outcome of greedy matching on one image.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
}

/// Detection indices ordered by descending score; equal scores keep
/// ascending index order.
pub fn score_order(dts: &[BoundingBox]) -> Result<Vec<usize>, MetricsError> {
    let scores = dts
        .iter()
        .map(BoundingBox::score_or_err)
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..dts.len()).collect();
    // stable sort: ties stay in index order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(order)
}

pub(crate) fn check_tau(tau: f64) -> Result<(), MetricsError> {
    if !(0.0..1.0).contains(&tau) {
        return Err(MetricsError::InvalidIouThreshold(tau));
    }
    Ok(())
}

/// Per-detection outcome of a matching pass that honours ignore flags.
#[derive(Debug, Clone)]
pub(crate) struct ImageMatch {
    /// Detection indices in processing order.
    pub order: Vec<usize>,
    /// Matched ground truth and its IoU, indexed by detection.
    pub dt_match: Vec<Option<(usize, f64)>>,
    /// Detection is neither TP nor FP.
    pub dt_ignored: Vec<bool>,
    /// Ground truth matched by some detection, indexed by ground truth.
    #[allow(dead_code)]
    pub gt_matched: Vec<bool>,
}

/// Greedy COCO matching. Each detection, in `order`, takes the unmatched
/// non-ignored ground truth with the highest IoU ≥ `tau` (lowest index on
/// ties); failing that, the best ignored ground truth, which marks the
/// detection ignored. Unmatched detections flagged in `dt_out_of_range` are
/// ignored as well.
pub(crate) fn match_with_ignore(
    gts: &[BoundingBox],
    gt_ignore: &[bool],
    dts: &[BoundingBox],
    dt_out_of_range: &[bool],
    order: &[usize],
    tau: f64,
) -> Result<ImageMatch, MetricsError> {
    let ious = dts
        .iter()
        .map(|d| gts.iter().map(|g| iou(g, d)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;

    let mut gt_matched = vec![false; gts.len()];
    let mut dt_match = vec![None; dts.len()];
    let mut dt_ignored = vec![false; dts.len()];

    for &d in order {
        let mut best: Option<(usize, f64)> = None;
        for want_ignored in [false, true] {
            for (g, &ov) in ious[d].iter().enumerate() {
                if gt_matched[g] || gt_ignore[g] != want_ignored || ov < tau {
                    continue;
                }
                if best.is_none_or(|(_, b)| ov > b) {
                    best = Some((g, ov));
                }
            }
            if best.is_some() {
                break;
            }
        }
        match best {
            Some((g, ov)) => {
                gt_matched[g] = true;
                dt_match[d] = Some((g, ov));
                dt_ignored[d] = gt_ignore[g];
            }
            None => dt_ignored[d] = dt_out_of_range[d],
        }
    }

    Ok(ImageMatch {
        order: order.to_vec(),
        dt_match,
        dt_ignored,
        gt_matched,
    })
}

/// Greedy matching of detections to ground truth at IoU threshold `tau`.
///
/// Detections are visited by descending score. A detection overlapping an
/// already matched ground truth counts as a false positive, so duplicates
/// are penalized.
pub fn match_detections(
    gts: &[BoundingBox],
    dts: &[BoundingBox],
    tau: f64,
) -> Result<MatchResult, MetricsError> {
    check_tau(tau)?;
    let order = score_order(dts)?;
    let m = match_with_ignore(
        gts,
        &vec![false; gts.len()],
        dts,
        &vec![false; dts.len()],
        &order,
        tau,
    )?;
    let mut pairs: Vec<MatchPair> = order
        .iter()
        .filter_map(|&d| m.dt_match[d].map(|(g, ov)| MatchPair { gt: g, dt: d, iou: ov }))
        .collect();
    pairs.sort_by_key(|p| p.dt);
    let n_tp = pairs.len();
    Ok(MatchResult {
        n_tp,
        n_fp: dts.len() - n_tp,
        n_fn: gts.len() - n_tp,
        pairs,
    })
}

/// Zero-denominator convention for precision and recall.
pub const EMPTY_RATIO: f64 = 0.0;

/// `(precision, recall)`; either is [`EMPTY_RATIO`] when its denominator is zero.
pub fn precision_recall(m: &MatchResult) -> (f64, f64) {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            EMPTY_RATIO
        } else {
            num as f64 / den as f64
        }
    };
    (
        ratio(m.n_tp, m.n_tp + m.n_fp),
        ratio(m.n_tp, m.n_tp + m.n_fn),
    )
}
