use std::fmt::Write as _;

use super::{
    average_precision_coco, average_precision_with, average_recall, olrp, AreaRange, EvalParams,
    ImageSample, MetricsError, SizeBucket, OLRP_TAU,
};

/// Value written for a metric that is undefined on the evaluated subset
/// (for example AP of a size bucket without ground truth).
pub const UNDEFINED: f64 = -1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub iou: String,
    pub area: String,
    pub max_det: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub max_dets: Vec<usize>,
    /// Lowest score the evaluated detector reports.
    pub score_cutoff: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            max_dets: vec![1, 10, 100],
            score_cutoff: 0.0,
        }
    }
}

fn defined(r: Result<f64, MetricsError>) -> Result<f64, MetricsError> {
    match r {
        Err(MetricsError::NoGroundTruth) | Err(MetricsError::EmptyLrp) => Ok(UNDEFINED),
        other => other,
    }
}

/// Full metric table for one class: AP at the usual IoU settings and size
/// buckets, AR per max-detection setting and bucket, and oLRP with its
/// components and threshold.
pub fn evaluate_report(images: &[ImageSample], cfg: &ReportConfig) -> Result<Vec<MetricRow>, MetricsError> {
    let top = cfg.max_dets.iter().copied().max().unwrap_or(100);
    let mut rows = Vec::new();
    let mut push = |metric: &str, iou: &str, area: AreaRange, max_det: Option<usize>, value: f64| {
        rows.push(MetricRow {
            metric: metric.to_string(),
            iou: iou.to_string(),
            area: area.name().to_string(),
            max_det,
            value,
        })
    };

    push("AP", "0.50:0.95", AreaRange::All, Some(top), defined(average_precision_coco(images, top, AreaRange::All))?);
    for (label, t) in [("0.50", 0.5), ("0.75", 0.75)] {
        let v = defined(average_precision_with(images, &EvalParams::new(t).max_det(top)))?;
        push("AP", label, AreaRange::All, Some(top), v);
    }
    for b in SizeBucket::ALL {
        let area = AreaRange::Bucket(b);
        push("AP", "0.50:0.95", area, Some(top), defined(average_precision_coco(images, top, area))?);
    }
    for &md in &cfg.max_dets {
        push("AR", "0.50:0.95", AreaRange::All, Some(md), defined(average_recall(images, md, AreaRange::All))?);
    }
    for b in SizeBucket::ALL {
        let area = AreaRange::Bucket(b);
        push("AR", "0.50:0.95", area, Some(top), defined(average_recall(images, top, area))?);
    }

    match olrp(images, OLRP_TAU, cfg.score_cutoff) {
        Ok(o) => {
            let c = o.components;
            push("oLRP", "0.50", AreaRange::All, None, o.olrp);
            push("oLRP_IoU", "0.50", AreaRange::All, None, c.lrp_iou.unwrap_or(UNDEFINED));
            push("oLRP_FP", "0.50", AreaRange::All, None, c.lrp_fp.unwrap_or(UNDEFINED));
            push("oLRP_FN", "0.50", AreaRange::All, None, c.lrp_fn.unwrap_or(UNDEFINED));
            push("oLRP_s", "0.50", AreaRange::All, None, o.s_opt);
            push("oLRP_unreliable", "0.50", AreaRange::All, None, if o.unreliable { 1.0 } else { 0.0 });
        }
        Err(MetricsError::EmptyLrp) => push("oLRP", "0.50", AreaRange::All, None, UNDEFINED),
        Err(e) => return Err(e),
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from("metric,iou,area,max_det,value\n");
    for r in rows {
        let md = r.max_det.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.metric, r.iou, r.area, md, r.value);
    }
    s
}
