//! Brute-force AP / AR / LRP written from the definitions, sharing no code
//! with the library beyond the box type.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skit_core::metrics::{BoundingBox, ImageSample};

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    let area = |r: &BoundingBox| (r.x_max - r.x_min) * (r.y_max - r.y_min);
    inter / (area(a) + area(b) - inter)
}

/// Per-detection match outcome for one image: detections visited by
/// descending score, each takes the free ground truth of highest IoU
/// (lowest index on ties) if that IoU reaches `tau`. Returns the IoU of the
/// match or `None`.
pub fn greedy(gts: &[BoundingBox], dts: &[BoundingBox], tau: f64) -> Vec<Option<f64>> {
    let mut order: Vec<usize> = (0..dts.len()).collect();
    order.sort_by(|&a, &b| dts[b].score.unwrap().partial_cmp(&dts[a].score.unwrap()).unwrap().then(a.cmp(&b)));
    let mut taken = vec![false; gts.len()];
    let mut out = vec![None; dts.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let v = iou(gt, &dts[d]);
            if v >= tau && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((g, v));
            }
        }
        if let Some((g, v)) = best {
            taken[g] = true;
            out[d] = Some(v);
        }
    }
    out
}

fn ranked(images: &[ImageSample], tau: f64) -> (Vec<(f64, bool)>, usize) {
    let mut all = Vec::new();
    let mut npos = 0;
    for img in images {
        npos += img.gts.len();
        let m = greedy(&img.gts, &img.dts, tau);
        for (d, r) in m.iter().enumerate() {
            all.push((img.dts[d].score.unwrap(), r.is_some()));
        }
    }
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    (all, npos)
}

/// 101-point interpolated AP: at every sampled recall, the best precision
/// over all ranking prefixes whose recall reaches it.
pub fn ap(images: &[ImageSample], tau: f64) -> f64 {
    let (all, npos) = ranked(images, tau);
    let mut total = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        let mut best = 0.0f64;
        for n in 1..=all.len() {
            let tp = all[..n].iter().filter(|x| x.1).count() as f64;
            if tp / npos as f64 >= r {
                best = best.max(tp / n as f64);
            }
        }
        total += best;
    }
    total / 101.0
}

pub fn ar(images: &[ImageSample]) -> f64 {
    let mut sum = 0.0;
    for i in 0..10 {
        let tau = 0.5 + 0.05 * i as f64;
        let (all, npos) = ranked(images, tau);
        sum += all.iter().filter(|x| x.1).count() as f64 / npos as f64;
    }
    sum / 10.0
}

pub fn lrp(images: &[ImageSample], s: f64, tau: f64) -> f64 {
    let (mut tp, mut fp, mut fneg, mut loc) = (0.0, 0.0, 0.0, 0.0);
    for img in images {
        let kept: Vec<BoundingBox> = img.dts.iter().filter(|d| d.score.unwrap() > s).copied().collect();
        let m = greedy(&img.gts, &kept, tau);
        let n_tp = m.iter().flatten().count() as f64;
        loc += m.iter().flatten().map(|v| 1.0 - v).sum::<f64>();
        tp += n_tp;
        fp += kept.len() as f64 - n_tp;
        fneg += img.gts.len() as f64 - n_tp;
    }
    (loc / (1.0 - tau) + fp + fneg) / (tp + fp + fneg)
}

/// Minimum LRP over thresholds just below every score and zero.
pub fn olrp(images: &[ImageSample], tau: f64) -> f64 {
    let mut cands = vec![0.0];
    for img in images {
        cands.extend(img.dts.iter().map(|d| d.score.unwrap()));
    }
    cands.iter().map(|&s| lrp(images, s, tau)).fold(f64::INFINITY, f64::min)
}

/// One or two images, at most ten boxes in total, with detections
/// scattered around the ground truth and distinct scores.
pub fn random_fixture(seed: u64) -> Vec<ImageSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_img = rng.random_range(1..=2);
    let mut images = Vec::new();
    for id in 0..n_img {
        let n_gt = rng.random_range(1..=2);
        let gts: Vec<BoundingBox> = (0..n_gt)
            .map(|_| {
                let x = rng.random_range(0.0..200.0);
                let y = rng.random_range(0.0..200.0);
                let w = rng.random_range(10.0..60.0);
                let h = rng.random_range(10.0..60.0);
                BoundingBox::new(x, y, x + w, y + h).unwrap()
            })
            .collect();
        let n_dt = rng.random_range(0..=3);
        let dts = (0..n_dt)
            .map(|_| {
                let base = if rng.random_bool(0.75) {
                    gts[rng.random_range(0..gts.len())]
                } else {
                    BoundingBox::new(150.0, 150.0, 190.0, 180.0).unwrap()
                };
                let j = |rng: &mut ChaCha8Rng| rng.random_range(-8.0..8.0);
                let x0 = base.x_min + j(&mut rng);
                let y0 = base.y_min + j(&mut rng);
                let x1 = (base.x_max + j(&mut rng)).max(x0 + 2.0);
                let y1 = (base.y_max + j(&mut rng)).max(y0 + 2.0);
                BoundingBox::new(x0.max(0.0), y0.max(0.0), x1, y1).unwrap().with_score(rng.random_range(0.01..1.0)).unwrap()
            })
            .collect();
        images.push(ImageSample { image_id: id as u64, gts, dts });
    }
    images
}
