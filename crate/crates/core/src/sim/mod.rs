//! Seeded scenario replay: synthetic trajectories, objects and detectors
//! driving the fusion pipeline end to end.

mod coupling;
mod detector;
mod render;
mod run;
mod scenario;

pub use coupling::apply_assignment;
pub use detector::{detector_intrinsics, sample_detections};
pub use render::{
    camera_at, duration, frame_count, frame_time, object_position, project_object, render_frame,
    render_frame_for, ObjectProjection, RenderedFrame,
};
pub use run::{
    config_hash, match_locations, replay, run_experiment, write_report, FrameState, MatchRecord, Report,
};
pub use scenario::{FusionConfig, ObjectSpec, Scenario, SyntheticDetectorSpec, TrajectorySpec};

use crate::fusion::FusionError;
use crate::salient::SalientError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid override: {0}")]
    InvalidOverride(String),
    #[error("time {t} outside the trajectory (duration {duration})")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("cannot apply allocation: {0}")]
    Coupling(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Salient(#[from] SalientError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
