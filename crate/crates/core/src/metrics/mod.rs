//! Detection quality metrics: IoU matching, COCO AP/AR and LRP/oLRP.
//!
//! Matching happens per image; precision-recall curves are built from the
//! detections of all images pooled by score.

mod boxes;
mod coco;
pub mod io;
mod lrp;
mod matching;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boxes::{iou, AreaRange, BoundingBox, SizeBucket, MEDIUM_MAX_AREA, SMALL_MAX_AREA};
pub use coco::{
    average_precision, average_precision_coco, average_precision_with, average_recall,
    coco_iou_thresholds, recall_at, recall_point, single_image, EvalParams, RECALL_POINTS,
};
pub use lrp::{lrp_error, olrp, score_grid, LrpBreakdown, OlrpResult, OLRP_TAU};
pub use matching::{match_detections, precision_recall, score_order, MatchPair, MatchResult, EMPTY_RATIO};
pub use report::{evaluate_report, rows_to_csv, MetricRow, ReportConfig, UNDEFINED};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("degenerate box ({x_min}, {y_min}, {x_max}, {y_max})")]
    DegenerateBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("detection has no score")]
    MissingScore,
    #[error("IoU threshold {0} outside [0, 1)")]
    InvalidIouThreshold(f64),
    #[error("score threshold {0} outside [0, 1]")]
    InvalidScoreThreshold(f64),
    #[error("max_det must be positive")]
    InvalidMaxDet,
    #[error("no ground truth in the evaluated subset")]
    NoGroundTruth,
    #[error("LRP undefined: no ground truth and no detections")]
    EmptyLrp,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Ground truth and detections of one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageSample {
    pub image_id: u64,
    pub gts: Vec<BoundingBox>,
    pub dts: Vec<BoundingBox>,
}
