//! Probabilistic saliency grid over a 2.5D terrain, updated from object
//! detections (positive updates) and from the camera footprint (negative
//! updates) in log-odds form.

mod camera;
mod grid;
pub mod io;
mod queue;
mod sensor;
mod terrain;
mod update;

pub use camera::{CameraIntrinsics, CameraModel};
pub use grid::{
    log_odds, log_odds_update, probability, Cell, CellIndex, RayHit, VoxelGrid, DEFAULT_CLAMP,
};
pub use queue::{FrameQueue, FrameUpdate};
pub use sensor::{
    area_factor, distance_factor, expected_bbox_extent, max_distance, negative_probability, positive_probability,
    projected_size,
    relative_fidelity, shrink, tukey_weight, BboxExtent, ObjectClassSpec, SensorModelParams,
    SignificantPoint, DEFAULT_MIN_PIXEL_EXTENT, P_EPSILON,
};
pub use terrain::{Extents, Ridge, Terrain};
pub use update::{
    negative_update, positive_update, update_from_frame, visible_cells, Detection, FrameOutcome,
    PositiveHit, SensorModel,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FusionError {
    #[error("probability {0} has infinite or undefined log-odds")]
    InvalidProbability(f64),
    #[error("distance must be positive, got {0}")]
    InvalidDistance(f64),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid object class: {0}")]
    InvalidClass(String),
    #[error("invalid sensor parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
