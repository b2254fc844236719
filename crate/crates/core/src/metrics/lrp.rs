use serde::{Deserialize, Serialize};

use super::matching::{check_tau, match_detections};
use super::{ImageSample, MetricsError};

/// IoU threshold at which the optimal LRP is defined.
pub const OLRP_TAU: f64 = 0.5;

/// LRP error and its components at one score threshold.
///
/// A component is `None` when its denominator is empty: no TPs for the
/// localization term, no surviving detections for the FP term, no ground
/// truth for the FN term. Such a component carries zero weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrpBreakdown {
    pub lrp: f64,
    pub lrp_iou: Option<f64>,
    pub lrp_fp: Option<f64>,
    pub lrp_fn: Option<f64>,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    /// Σ (1 - IoU) over true positives.
    pub loc_error_sum: f64,
    pub tau: f64,
}

impl LrpBreakdown {
    /// The weighted form: components recombined with
    /// `w_IoU = N_TP / (1 - τ)`, `w_FP = |Y_s|`, `w_FN = |X|`.
    pub fn recombined(&self) -> f64 {
        let z = (self.n_tp + self.n_fp + self.n_fn) as f64;
        let w_iou = self.n_tp as f64 / (1.0 - self.tau);
        let w_fp = (self.n_tp + self.n_fp) as f64;
        let w_fn = (self.n_tp + self.n_fn) as f64;
        (w_iou * self.lrp_iou.unwrap_or(0.0)
            + w_fp * self.lrp_fp.unwrap_or(0.0)
            + w_fn * self.lrp_fn.unwrap_or(0.0))
            / z
    }
}

/// LRP error over a dataset with detections restricted to `score > s`.
///
/// Matching is per image; counts and localization errors are summed over
/// images before the combined value is formed.
pub fn lrp_error(images: &[ImageSample], s: f64, tau: f64) -> Result<LrpBreakdown, MetricsError> {
    check_tau(tau)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(MetricsError::InvalidScoreThreshold(s));
    }
    let (mut n_tp, mut n_fp, mut n_fn) = (0usize, 0usize, 0usize);
    let mut loc = 0.0;
    for img in images {
        let kept: Vec<_> = img
            .dts
            .iter()
            .filter_map(|d| match d.score {
                Some(sc) if sc > s => Some(Ok(*d)),
                Some(_) => None,
                None => Some(Err(MetricsError::MissingScore)),
            })
            .collect::<Result<_, _>>()?;
        let m = match_detections(&img.gts, &kept, tau)?;
        n_tp += m.n_tp;
        n_fp += m.n_fp;
        n_fn += m.n_fn;
        loc += m.pairs.iter().map(|p| 1.0 - p.iou).sum::<f64>();
    }
    let z = n_tp + n_fp + n_fn;
    if z == 0 {
        return Err(MetricsError::EmptyLrp);
    }
    let lrp = (loc / (1.0 - tau) + n_fp as f64 + n_fn as f64) / z as f64;
    let frac = |num: f64, den: usize| (den > 0).then(|| num / den as f64);
    Ok(LrpBreakdown {
        lrp,
        lrp_iou: frac(loc, n_tp),
        lrp_fp: frac(n_fp as f64, n_tp + n_fp),
        lrp_fn: frac(n_fn as f64, n_tp + n_fn),
        n_tp,
        n_fp,
        n_fn,
        loc_error_sum: loc,
        tau,
    })
}

/// Optimal LRP over the candidate score thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlrpResult {
    pub olrp: f64,
    pub s_opt: f64,
    pub components: LrpBreakdown,
    /// The optimum keeps every reported detection while the detector was
    /// cut off at a positive score, so the true optimum may lie below the
    /// cutoff.
    pub unreliable: bool,
}

/// Candidate thresholds: 0 together with every distinct detection score,
/// ascending. LRP is piecewise constant between consecutive scores, so
/// this grid is exhaustive.
pub fn score_grid(images: &[ImageSample]) -> Result<Vec<f64>, MetricsError> {
    let mut grid = vec![0.0];
    for img in images {
        for d in &img.dts {
            grid.push(d.score_or_err()?);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Minimum LRP error over [`score_grid`]. Among equal minima the largest
/// threshold is reported. `score_cutoff` is the lowest score the detector
/// emits (0 when it reports its full range).
pub fn olrp(images: &[ImageSample], tau: f64, score_cutoff: f64) -> Result<OlrpResult, MetricsError> {
    let grid = score_grid(images)?;
    let mut best: Option<(f64, LrpBreakdown)> = None;
    for &s in &grid {
        let r = lrp_error(images, s, tau)?;
        if best.is_none_or(|(_, b)| r.lrp <= b.lrp) {
            best = Some((s, r));
        }
    }
    let (s_opt, components) = best.expect("grid always holds 0");
    Ok(OlrpResult {
        olrp: components.lrp,
        s_opt,
        components,
        unreliable: score_cutoff > 0.0 && s_opt == grid[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{coco::single_image, BoundingBox};
    use proptest::prelude::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn s(bx: BoundingBox, score: f64) -> BoundingBox {
        bx.with_score(score).unwrap()
    }

    #[test]
    fn perfect_detection_has_zero_error() {
        let g = b(0.0, 0.0, 10.0, 10.0);
        let imgs = single_image(&[g], &[s(g, 0.8)]);
        let r = lrp_error(&imgs, 0.5, 0.5).unwrap();
        assert_eq!(r.lrp, 0.0);
        let o = olrp(&imgs, OLRP_TAU, 0.0).unwrap();
        assert_eq!(o.olrp, 0.0);
        assert!(o.s_opt < 0.8);
    }

    #[test]
    fn nothing_survives_threshold() {
        let g = b(0.0, 0.0, 10.0, 10.0);
        let imgs = single_image(&[g, b(20.0, 0.0, 30.0, 10.0)], &[s(g, 0.4)]);
        let r = lrp_error(&imgs, 0.6, 0.5).unwrap();
        assert_eq!(r.lrp, 1.0);
        assert_eq!(r.lrp_fp, None);
        assert_eq!(r.lrp_iou, None);
        assert_eq!(r.lrp_fn, Some(1.0));
    }

    #[test]
    fn hand_evaluated_case() {
        // two TPs with IoU 0.6 and 0.8, one FP, one FN, tau 0.5:
        // (1/4)·[(0.4 + 0.2)/0.5 + 1 + 1] = 0.8
        let g0 = b(0.0, 0.0, 10.0, 10.0);
        let g1 = b(100.0, 0.0, 110.0, 10.0);
        let g2 = b(200.0, 0.0, 210.0, 10.0);
        let d0 = s(b(0.0, 0.0, 10.0, 6.0), 0.9); // iou 0.6
        let d1 = s(b(100.0, 0.0, 110.0, 8.0), 0.8); // iou 0.8
        let fp = s(b(500.0, 500.0, 510.0, 510.0), 0.7);
        let imgs = single_image(&[g0, g1, g2], &[d0, d1, fp]);
        let r = lrp_error(&imgs, 0.0, 0.5).unwrap();
        assert_eq!((r.n_tp, r.n_fp, r.n_fn), (2, 1, 1));
        assert!((r.lrp - 0.8).abs() < 1e-12);
        assert!((r.recombined() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_problem_is_an_error() {
        let imgs = single_image(&[], &[]);
        assert!(matches!(lrp_error(&imgs, 0.0, 0.5), Err(MetricsError::EmptyLrp)));
        assert!(olrp(&imgs, 0.5, 0.0).is_err());
    }

    #[test]
    fn low_score_false_positives_are_cut() {
        let g = b(0.0, 0.0, 10.0, 10.0);
        let imgs = single_image(
            &[g],
            &[
                s(g, 0.9),
                s(b(50.0, 50.0, 60.0, 60.0), 0.3),
                s(b(70.0, 50.0, 80.0, 60.0), 0.2),
            ],
        );
        let o = olrp(&imgs, 0.5, 0.0).unwrap();
        assert_eq!(o.olrp, 0.0);
        assert!(o.s_opt >= 0.3 && o.s_opt < 0.9);
        assert!(!o.unreliable);
    }

    #[test]
    fn optimum_at_cutoff_is_flagged() {
        // every detection is a TP, so keeping all of them is optimal; the
        // detector cannot report below 0.3
        let gs = [b(0.0, 0.0, 10.0, 10.0), b(20.0, 0.0, 30.0, 10.0), b(40.0, 0.0, 50.0, 10.0)];
        let ds = [s(gs[0], 0.9), s(gs[1], 0.6), s(gs[2], 0.3)];
        let imgs = single_image(&gs, &ds);
        let o = olrp(&imgs, 0.5, 0.3).unwrap();
        assert_eq!(o.s_opt, 0.0);
        assert!(o.unreliable);
        assert!(!olrp(&imgs, 0.5, 0.0).unwrap().unreliable);
    }

    fn arb_images() -> impl Strategy<Value = Vec<ImageSample>> {
        let bx = (0.0..40.0f64, 0.0..40.0f64, 3.0..15.0f64, 3.0..15.0f64)
            .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, x + w, y + h).unwrap());
        let img = (
            prop::collection::vec(bx.clone(), 0..5),
            prop::collection::vec((bx, 0.01..1.0f64), 0..5),
        )
            .prop_map(|(g, d)| ImageSample {
                image_id: 0,
                gts: g,
                dts: d.into_iter().map(|(b, sc)| b.with_score(sc).unwrap()).collect(),
            });
        prop::collection::vec(img, 1..3).prop_filter("non-empty", |imgs| {
            imgs.iter().any(|i| !i.gts.is_empty() || !i.dts.is_empty())
        })
    }

    proptest! {
        #[test]
        fn weighted_and_combined_forms_agree(imgs in arb_images(), s in 0.0..1.0f64, tau in 0.1..0.9f64) {
            if let Ok(r) = lrp_error(&imgs, s, tau) {
                prop_assert!((r.lrp - r.recombined()).abs() < 1e-12);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&r.lrp));
            }
        }

        #[test]
        fn olrp_is_a_minimum(imgs in arb_images()) {
            let has_gt = imgs.iter().any(|i| !i.gts.is_empty());
            prop_assume!(has_gt);
            let o = olrp(&imgs, OLRP_TAU, 0.0).unwrap();
            for s in score_grid(&imgs).unwrap() {
                prop_assert!(o.olrp <= lrp_error(&imgs, s, OLRP_TAU).unwrap().lrp);
            }
        }
    }
}
