use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Axis-aligned box in pixel coordinates.
///
/// Ground-truth boxes carry no score; detections carry a confidence in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub class_id: u32,
    pub score: Option<f64>,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, MetricsError> {
        let b = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
            class_id: 0,
            score: None,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_score(mut self, score: f64) -> Result<Self, MetricsError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(MetricsError::InvalidScore(score));
        }
        self.score = Some(score);
        Ok(self)
    }

    pub fn with_class(mut self, class_id: u32) -> Self {
        self.class_id = class_id;
        self
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(MetricsError::DegenerateBox {
                x_min: self.x_min,
                y_min: self.y_min,
                x_max: self.x_max,
                y_max: self.y_max,
            });
        }
        if let Some(s) = self.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(MetricsError::InvalidScore(s));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    /// Closed containment test, boundary included.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub(crate) fn score_or_err(&self) -> Result<f64, MetricsError> {
        self.score.ok_or(MetricsError::MissingScore)
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64, MetricsError> {
    a.validate()?;
    b.validate()?;
    let iw = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let ih = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if iw <= 0.0 || ih <= 0.0 {
        return Ok(0.0);
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

/// COCO object size classes by box area in pixels².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
}

pub const SMALL_MAX_AREA: f64 = 32.0 * 32.0;
pub const MEDIUM_MAX_AREA: f64 = 96.0 * 96.0;

impl SizeBucket {
    pub fn of_area(area: f64) -> SizeBucket {
        if area < SMALL_MAX_AREA {
            SizeBucket::Small
        } else if area <= MEDIUM_MAX_AREA {
            SizeBucket::Medium
        } else {
            SizeBucket::Large
        }
    }

    pub fn of(b: &BoundingBox) -> SizeBucket {
        SizeBucket::of_area(b.area())
    }

    pub fn name(self) -> &'static str {
        match self {
            SizeBucket::Small => "small",
            SizeBucket::Medium => "medium",
            SizeBucket::Large => "large",
        }
    }

    pub const ALL: [SizeBucket; 3] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large];
}

/// Area filter applied during evaluation: everything, or one size bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AreaRange {
    #[default]
    All,
    Bucket(SizeBucket),
}

impl AreaRange {
    pub fn admits(self, b: &BoundingBox) -> bool {
        match self {
            AreaRange::All => true,
            AreaRange::Bucket(bucket) => SizeBucket::of(b) == bucket,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AreaRange::All => "all",
            AreaRange::Bucket(b) => b.name(),
        }
    }
}
