use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::FusionError;

/// Pinhole intrinsics. Focal lengths are in calibration pixels; detections
/// are expressed in detector-input pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub f_x: f64,
    pub f_y: f64,
    pub img_w_calib: f64,
    pub img_h_calib: f64,
    pub img_w_input: f64,
    pub img_h_input: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), FusionError> {
        let all = [self.f_x, self.f_y, self.img_w_calib, self.img_h_calib, self.img_w_input, self.img_h_input];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(FusionError::InvalidCamera("focal lengths and image sizes must be positive".into()))
        }
    }

    /// Horizontal and vertical field of view, radians.
    pub fn fov(&self) -> (f64, f64) {
        (
            2.0 * (self.img_w_calib / 2.0 / self.f_x).atan(),
            2.0 * (self.img_h_calib / 2.0 / self.f_y).atan(),
        )
    }

    fn input_scale(&self) -> (f64, f64) {
        (self.img_w_input / self.img_w_calib, self.img_h_input / self.img_h_calib)
    }
}

/// Intrinsics plus a pose. `orientation` maps camera axes to world axes
/// (world <- camera). Camera axes follow the OpenCV convention: x right,
/// y down, z along the optical axis. The world frame is x east, y north,
/// z up.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub intrinsics: CameraIntrinsics,
    pub position: Point3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl CameraModel {
    pub fn new(intrinsics: CameraIntrinsics, position: Point3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        CameraModel { intrinsics, position, orientation }
    }

    /// Camera heading `yaw` (radians from +x towards +y) and pitched down by
    /// `tilt` (0 = horizon, pi/2 = nadir).
    pub fn from_heading(intrinsics: CameraIntrinsics, position: Point3<f64>, yaw: f64, tilt: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (st, ct) = tilt.sin_cos();
        let forward = Vector3::new(ct * cy, ct * sy, -st);
        let right = Vector3::new(sy, -cy, 0.0);
        let down = forward.cross(&right);
        let m = Matrix3::from_columns(&[right, down, forward]);
        let orientation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m));
        CameraModel { intrinsics, position, orientation }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        self.intrinsics.validate()?;
        if !self.position.coords.iter().all(|v| v.is_finite()) {
            return Err(FusionError::InvalidCamera("non-finite position".into()));
        }
        let q = self.orientation.quaternion();
        if !q.coords.iter().all(|v| v.is_finite()) || (q.norm() - 1.0).abs() > 1e-6 {
            return Err(FusionError::InvalidCamera("orientation is not a unit quaternion".into()));
        }
        Ok(())
    }

    /// World point to (u, v, depth) in detector-input pixels. `None` when the
    /// point is not in front of the camera.
    pub fn project(&self, world: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let rot = self.orientation.to_rotation_matrix();
        project_with(&self.intrinsics, &rot, &self.position, world)
    }

    pub fn in_image(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.intrinsics.img_w_input && v < self.intrinsics.img_h_input
    }

    /// Unit world-frame direction of the ray through an input pixel.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Vector3<f64> {
        let k = &self.intrinsics;
        let (sx, sy) = k.input_scale();
        let uc = u / sx;
        let vc = v / sy;
        let d = Vector3::new((uc - k.img_w_calib / 2.0) / k.f_x, (vc - k.img_h_calib / 2.0) / k.f_y, 1.0);
        (self.orientation * d).normalize()
    }
}

pub(crate) fn project_with(
    k: &CameraIntrinsics,
    rot: &Rotation3<f64>,
    position: &Point3<f64>,
    world: &Point3<f64>,
) -> Option<(f64, f64, f64)> {
    let pc = rot.inverse_transform_vector(&(world - position));
    if pc.z <= 1e-9 {
        return None;
    }
    let (sx, sy) = k.input_scale();
    let u = (k.f_x * pc.x / pc.z + k.img_w_calib / 2.0) * sx;
    let v = (k.f_y * pc.y / pc.z + k.img_h_calib / 2.0) * sy;
    Some((u, v, pc.z))
}
