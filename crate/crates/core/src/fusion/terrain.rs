use serde::{Deserialize, Serialize};

use super::FusionError;

/// Axis-aligned horizontal bounds, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extents {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Extents {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max
    }
}

/// A raised band along a segment with a raised-cosine cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub height: f64,
    pub half_width: f64,
}

impl Ridge {
    fn height_at(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (self.x1 - self.x0, self.y1 - self.y0);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 { (((x - self.x0) * dx + (y - self.y0) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let d = ((x - self.x0 - t * dx).powi(2) + (y - self.y0 - t * dy).powi(2)).sqrt();
        if d >= self.half_width {
            0.0
        } else {
            self.height * 0.5 * (1.0 + (std::f64::consts::PI * d / self.half_width).cos())
        }
    }
}

/// Analytic height field: a tilted plane plus ridges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terrain {
    pub extents: Extents,
    #[serde(default)]
    pub base_height: f64,
    /// Plane gradient (dz/dx, dz/dy).
    #[serde(default)]
    pub slope: [f64; 2],
    #[serde(default)]
    pub ridges: Vec<Ridge>,
}

impl Terrain {
    pub fn flat(extents: Extents, height: f64) -> Self {
        Terrain { extents, base_height: height, slope: [0.0, 0.0], ridges: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        let e = &self.extents;
        if !(e.x_max > e.x_min && e.y_max > e.y_min) {
            return Err(FusionError::InvalidGrid("empty terrain extents".into()));
        }
        if self.ridges.iter().any(|r| !(r.half_width > 0.0)) {
            return Err(FusionError::InvalidGrid("ridge half width must be positive".into()));
        }
        Ok(())
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        let cx = self.extents.x_min;
        let cy = self.extents.y_min;
        let mut h = self.base_height + self.slope[0] * (x - cx) + self.slope[1] * (y - cy);
        for r in &self.ridges {
            h += r.height_at(x, y);
        }
        h
    }
}
