use serde::{Deserialize, Serialize};

use super::SimError;
use crate::fusion::{CameraIntrinsics, ObjectClassSpec, Terrain, DEFAULT_MIN_PIXEL_EXTENT};
use crate::salient::{DEFAULT_LINK_DISTANCE, DEFAULT_THRESHOLD};

/// A ground-truth object standing on the terrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    #[serde(default)]
    pub name: String,
    pub x: f64,
    pub y: f64,
    /// Footprint width, meters.
    pub width: f64,
    /// Standing height, meters.
    pub height: f64,
    /// Horizontal velocity, m/s.
    #[serde(default)]
    pub velocity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    /// Height above the terrain under the camera, meters.
    pub altitude: f64,
    pub speed: f64,
    /// Camera pitch below the horizon, degrees.
    pub tilt_deg: f64,
    /// Horizontal waypoints. A single waypoint hovers for `duration`.
    pub waypoints: Vec<[f64; 2]>,
    #[serde(default)]
    pub duration: Option<f64>,
    /// Heading while hovering, degrees from +x towards +y.
    #[serde(default)]
    pub heading_deg: f64,
}

fn one() -> u32 {
    1
}

fn unit() -> f64 {
    1.0
}

fn default_score_tp() -> [f64; 2] {
    [0.8, 0.1]
}

fn default_score_fp() -> [f64; 2] {
    [0.45, 0.1]
}

fn default_score_min() -> f64 {
    0.3
}

/// Stand-in for a characterized CNN: size-dependent hit rate, box noise,
/// score distributions and a false-positive rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDetectorSpec {
    pub id: String,
    /// Profile this detector instantiates; defaults to `id`.
    #[serde(default)]
    pub profile: Option<String>,
    /// Accuracy measure used to derive the relative fidelity.
    pub accuracy: f64,
    /// Explicit relative fidelity, overriding `accuracy / best accuracy`.
    #[serde(default)]
    pub p_det_rel: Option<f64>,
    /// Detector input resolution; defaults to the camera's.
    #[serde(default)]
    pub input_size: Option<[f64; 2]>,
    /// Multiplier on the hit rates, e.g. for a reduced encoding bitrate.
    #[serde(default = "unit")]
    pub quality: f64,
    #[serde(default = "one")]
    pub period: u32,
    #[serde(default)]
    pub offset: u32,
    /// Hit rates anchored at sqrt(box area) = 16, 64 and 128 px.
    pub tp_small: f64,
    pub tp_medium: f64,
    pub tp_large: f64,
    /// Mean false positives per processed frame.
    #[serde(default)]
    pub fp_rate: f64,
    #[serde(default)]
    pub center_noise_px: f64,
    #[serde(default)]
    pub scale_noise: f64,
    /// (mean, std) of true-positive scores.
    #[serde(default = "default_score_tp")]
    pub score_tp: [f64; 2],
    #[serde(default = "default_score_fp")]
    pub score_fp: [f64; 2],
    /// Reporting cutoff; lower-scored boxes are dropped.
    #[serde(default = "default_score_min")]
    pub score_min: f64,
}

impl SyntheticDetectorSpec {
    pub fn profile(&self) -> &str {
        self.profile.as_deref().unwrap_or(&self.id)
    }

    /// Piecewise-linear hit rate over sqrt(box area) in input pixels.
    pub fn tp_rate(&self, size_px: f64) -> f64 {
        let pts = [(0.0, 0.0), (16.0, self.tp_small), (64.0, self.tp_medium), (128.0, self.tp_large)];
        if size_px >= 128.0 {
            return self.tp_large;
        }
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if size_px <= x1 {
                return y0 + (y1 - y0) * (size_px.max(0.0) - x0) / (x1 - x0);
            }
        }
        self.tp_large
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let rates = [self.tp_small, self.tp_medium, self.tp_large];
        let bad = |m: &str| Err(SimError::InvalidScenario(format!("detector {}: {m}", self.id)));
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("tp rates must lie in [0, 1]");
        }
        if !(self.fp_rate >= 0.0) || !(self.center_noise_px >= 0.0) || !(self.scale_noise >= 0.0) {
            return bad("fp rate and noise must be non-negative");
        }
        if self.score_tp[1] < 0.0 || self.score_fp[1] < 0.0 {
            return bad("score std must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.quality) {
            return bad("quality must lie in [0, 1]");
        }
        if self.period == 0 {
            return bad("period must be at least 1");
        }
        if !(self.accuracy >= 0.0) || self.p_det_rel.is_some_and(|r| !(0.0..=1.0).contains(&r)) {
            return bad("accuracy and p_det_rel must be non-negative, p_det_rel at most 1");
        }
        Ok(())
    }
}

fn d_resolution() -> f64 {
    0.5
}
fn d_ppos() -> f64 {
    0.2
}
fn d_pneg() -> f64 {
    0.05
}
fn d_clamp() -> f64 {
    3.5
}
fn d_min_px() -> f64 {
    DEFAULT_MIN_PIXEL_EXTENT
}
fn d_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn d_link() -> f64 {
    DEFAULT_LINK_DISTANCE
}
fn d_gate() -> f64 {
    3.0
}
fn d_trail() -> f64 {
    1.5
}

/// Fusion, extraction and evaluation settings for one replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    #[serde(default = "d_resolution")]
    pub resolution: f64,
    #[serde(default = "d_ppos")]
    pub p_positive_max: f64,
    #[serde(default = "d_pneg")]
    pub p_negative_max: f64,
    /// Symmetric log-odds clamp.
    #[serde(default = "d_clamp")]
    pub clamp: f64,
    #[serde(default = "d_min_px")]
    pub min_pixel_extent: f64,
    #[serde(default = "d_threshold")]
    pub threshold: f64,
    #[serde(default = "d_link")]
    pub link_distance: f64,
    /// Largest salient-to-object distance accepted as a match, meters.
    #[serde(default = "d_gate")]
    pub match_gate: f64,
    /// Above-threshold cells farther than this from every object count as
    /// trail cells.
    #[serde(default = "d_trail")]
    pub trail_radius: f64,
    /// Replaces every detector's relative fidelity.
    #[serde(default)]
    pub p_det_rel: Option<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        if !(self.resolution > 0.0) {
            return bad(format!("resolution {}", self.resolution));
        }
        if !(0.0..=0.5).contains(&self.p_positive_max) || !(0.0..=0.5).contains(&self.p_negative_max) {
            return bad("p_positive_max and p_negative_max must lie in [0, 0.5]".into());
        }
        if !(self.clamp > 0.0) || !(self.min_pixel_extent > 0.0) {
            return bad("clamp and min_pixel_extent must be positive".into());
        }
        if !(self.threshold > 0.5 && self.threshold < 1.0) || !(self.link_distance > 0.0) {
            return bad("threshold must lie in (0.5, 1) and link distance be positive".into());
        }
        if !(self.match_gate > 0.0) || !(self.trail_radius >= 0.0) {
            return bad("match gate must be positive, trail radius non-negative".into());
        }
        if self.p_det_rel.is_some_and(|r| !(0.0..=1.0).contains(&r)) {
            return bad("p_det_rel must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// Sets one field from a `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        let num = || value.trim().parse::<f64>().map_err(|e| SimError::InvalidOverride(format!("{key}={value}: {e}")));
        match key.trim() {
            "resolution" | "grid_res" => self.resolution = num()?,
            "p_positive_max" => self.p_positive_max = num()?,
            "p_negative_max" => self.p_negative_max = num()?,
            "clamp" => self.clamp = num()?,
            "min_pixel_extent" => self.min_pixel_extent = num()?,
            "threshold" => self.threshold = num()?,
            "link_distance" => self.link_distance = num()?,
            "match_gate" => self.match_gate = num()?,
            "trail_radius" => self.trail_radius = num()?,
            "p_det_rel" => self.p_det_rel = Some(num()?),
            other => return Err(SimError::InvalidOverride(format!("unknown key `{other}`"))),
        }
        self.validate()
    }
}

/// Everything needed to replay one synthetic mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    /// Processing frames per second.
    pub frame_rate: f64,
    pub camera: CameraIntrinsics,
    pub terrain: Terrain,
    #[serde(default = "ObjectClassSpec::person")]
    pub class: ObjectClassSpec,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub detectors: Vec<SyntheticDetectorSpec>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, SimError> {
        let s: Scenario = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        self.camera.validate()?;
        self.terrain.validate()?;
        self.class.validate()?;
        self.fusion.validate()?;
        if !(self.frame_rate > 0.0) {
            return bad("frame rate must be positive".into());
        }
        let t = &self.trajectory;
        if t.waypoints.is_empty() {
            return bad("trajectory needs at least one waypoint".into());
        }
        if t.waypoints.len() == 1 && !t.duration.is_some_and(|d| d > 0.0) {
            return bad("a hovering trajectory needs a positive duration".into());
        }
        if t.waypoints.len() > 1 && !(t.speed > 0.0) {
            return bad("speed must be positive".into());
        }
        if !(t.altitude > 0.0) || !(0.0..=90.0).contains(&t.tilt_deg) {
            return bad("altitude must be positive and tilt within [0, 90] degrees".into());
        }
        let e = &self.terrain.extents;
        if t.waypoints.iter().any(|w| !e.contains(w[0], w[1])) {
            return bad("waypoints must lie inside the terrain".into());
        }
        for o in &self.objects {
            if !e.contains(o.x, o.y) {
                return bad(format!("object `{}` outside the terrain", o.name));
            }
            if !(o.width > 0.0 && o.height > 0.0) {
                return bad(format!("object `{}` needs positive size", o.name));
            }
        }
        for d in &self.detectors {
            d.validate()?;
        }
        let mut ids: Vec<&str> = self.detectors.iter().map(|d| d.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("detector ids must be unique".into());
        }
        Ok(())
    }
}
