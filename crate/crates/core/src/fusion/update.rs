use nalgebra::Point3;

use super::camera::{project_with, CameraModel};
use super::grid::{CellIndex, VoxelGrid};
use super::sensor::{
    area_factor, distance_factor, max_distance, negative_probability, positive_probability, shrink,
    ObjectClassSpec, SensorModelParams, SignificantPoint, DEFAULT_MIN_PIXEL_EXTENT,
};
use super::FusionError;
use crate::metrics::BoundingBox;

/// One detection in detector-input pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub score: f64,
    pub detector_id: String,
    pub timestamp: f64,
}

impl Detection {
    pub fn validate(&self, cam: &CameraModel) -> Result<(), FusionError> {
        let b = &self.bbox;
        let k = &cam.intrinsics;
        let tol = 1e-9;
        if !(b.x_min <= b.x_max && b.y_min <= b.y_max)
            || b.x_min < -tol
            || b.y_min < -tol
            || b.x_max > k.img_w_input + tol
            || b.y_max > k.img_h_input + tol
        {
            return Err(FusionError::InvalidDetection(format!("bbox {b:?} outside the input image")));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(FusionError::InvalidDetection(format!("score {}", self.score)));
        }
        Ok(())
    }

    pub fn significant_point(&self, sp: SignificantPoint) -> (f64, f64) {
        let (cx, cy) = self.bbox.center();
        match sp {
            SignificantPoint::BboxCenter => (cx, cy),
            SignificantPoint::BboxBottomCenter => (cx, self.bbox.y_max),
        }
    }
}

/// Class size model plus one detector's sensor parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub class: ObjectClassSpec,
    pub params: SensorModelParams,
    pub min_pixel_extent: f64,
}

impl SensorModel {
    pub fn new(class: ObjectClassSpec, params: SensorModelParams) -> Self {
        SensorModel { class, params, min_pixel_extent: DEFAULT_MIN_PIXEL_EXTENT }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        self.class.validate()?;
        self.params.validate()?;
        if !(self.min_pixel_extent > 0.0) {
            return Err(FusionError::InvalidParams("min_pixel_extent must be positive".into()));
        }
        Ok(())
    }

    pub fn max_distance(&self, cam: &CameraModel) -> f64 {
        max_distance(&self.class, &cam.intrinsics, self.min_pixel_extent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveHit {
    pub cell: CellIndex,
    pub point: Point3<f64>,
    pub distance: f64,
    pub p_area: f64,
    /// Update probability; exactly 0.5 when the update was a no-op.
    pub probability: f64,
}

impl PositiveHit {
    pub fn applied(&self) -> bool {
        self.probability != 0.5
    }
}

/// Casts the detection's significant point onto the grid and raises the hit
/// cell. `Ok(None)` when the ray misses the grid.
pub fn positive_update(
    grid: &mut VoxelGrid,
    det: &Detection,
    cam: &CameraModel,
    model: &SensorModel,
) -> Result<Option<PositiveHit>, FusionError> {
    cam.validate()?;
    model.validate()?;
    det.validate(cam)?;
    let (u, v) = det.significant_point(model.class.significant_point);
    let dir = cam.pixel_ray(u, v);
    let Some(hit) = grid.raycast(&cam.position, &dir) else {
        return Ok(None);
    };
    let p_area = area_factor(&model.class, &cam.intrinsics, det.bbox.width(), det.bbox.height(), hit.distance)?;
    let raw = positive_probability(p_area, det.score, &model.params);
    let mut out = PositiveHit { cell: hit.cell, point: hit.point, distance: hit.distance, p_area, probability: 0.5 };
    if raw > 0.5 {
        out.probability = shrink(raw);
        grid.update(hit.cell, out.probability)?;
        grid.record_point(hit.cell, hit.point);
    }
    Ok(Some(out))
}

/// Cells within `max_range` of the camera whose centers project inside the
/// image, outside every box, and are not hidden by other tiles.
pub fn visible_cells(
    grid: &VoxelGrid,
    cam: &CameraModel,
    boxes: &[BoundingBox],
    max_range: f64,
) -> Result<Vec<CellIndex>, FusionError> {
    cam.validate()?;
    let rot = cam.orientation.to_rotation_matrix();
    let pos = cam.position;
    let res = grid.resolution();
    let (ox, oy) = grid.origin();
    let (nx, ny) = grid.dims();
    let range = if max_range.is_finite() { max_range } else { f64::MAX };
    let lo = |c: f64, o: f64| (((c - range - o) / res).floor().max(0.0)) as i64;
    let hi = |c: f64, o: f64, n: i64| ((((c + range - o) / res).floor()).min((n - 1) as f64)) as i64;
    let (x0, x1) = (lo(pos.x, ox), hi(pos.x, ox, nx));
    let (y0, y1) = (lo(pos.y, oy), hi(pos.y, oy, ny));
    let mut out = Vec::new();
    for iy in y0..=y1 {
        for ix in x0..=x1 {
            let idx = (ix, iy);
            let c = grid.center(idx);
            if (c - pos).norm() > range {
                continue;
            }
            let Some((u, v, _)) = project_with(&cam.intrinsics, &rot, &pos, &c) else {
                continue;
            };
            if !cam.in_image(u, v) || boxes.iter().any(|b| b.contains(u, v)) {
                continue;
            }
            if grid.occluded(&pos, idx) {
                continue;
            }
            out.push(idx);
        }
    }
    Ok(out)
}

/// Lowers every visible cell outside the detections' boxes and outside
/// `exclude`. Returns the number of cells updated.
pub fn negative_update(
    grid: &mut VoxelGrid,
    cam: &CameraModel,
    detections: &[Detection],
    exclude: &[CellIndex],
    model: &SensorModel,
) -> Result<usize, FusionError> {
    model.validate()?;
    let max_d = model.max_distance(cam);
    let boxes: Vec<BoundingBox> = detections.iter().map(|d| d.bbox.clone()).collect();
    let cells = visible_cells(grid, cam, &boxes, max_d)?;
    let mut n = 0;
    for idx in cells {
        if exclude.contains(&idx) {
            continue;
        }
        let dist = (grid.center(idx) - cam.position).norm();
        let p = negative_probability(distance_factor(dist, max_d), &model.params);
        if p < 0.5 {
            grid.update(idx, shrink(p))?;
            n += 1;
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameOutcome {
    pub hits: Vec<PositiveHit>,
    pub negative_cells: usize,
}

/// One detector's results on one frame: a positive update per detection,
/// then one negative sweep that skips the boxes and the cells just raised.
pub fn update_from_frame(
    grid: &mut VoxelGrid,
    detections: &[Detection],
    cam: &CameraModel,
    model: &SensorModel,
) -> Result<FrameOutcome, FusionError> {
    let mut out = FrameOutcome::default();
    for det in detections {
        if let Some(hit) = positive_update(grid, det, cam, model)? {
            out.hits.push(hit);
        }
    }
    let raised: Vec<CellIndex> = out.hits.iter().filter(|h| h.applied()).map(|h| h.cell).collect();
    out.negative_cells = negative_update(grid, cam, detections, &raised, model)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::camera::CameraIntrinsics;
    use crate::fusion::terrain::{Extents, Terrain};

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics { f_x: 500.0, f_y: 500.0, img_w_calib: 400.0, img_h_calib: 300.0, img_w_input: 400.0, img_h_input: 300.0 }
    }

    fn setup() -> (VoxelGrid, CameraModel, SensorModel) {
        let e = Extents { x_min: -30.0, y_min: -30.0, x_max: 30.0, y_max: 30.0 };
        let g = VoxelGrid::new(Terrain::flat(e, 0.0), 0.5).unwrap();
        let cam = CameraModel::from_heading(intr(), Point3::new(0.0, 0.0, 10.0), 0.0, std::f64::consts::FRAC_PI_2);
        let m = SensorModel::new(ObjectClassSpec::person(), SensorModelParams { p_det_rel: 1.0, p_positive_max: 0.3, p_negative_max: 0.1 });
        (g, cam, m)
    }

    fn det(x0: f64, y0: f64, w: f64, h: f64, score: f64) -> Detection {
        Detection { bbox: BoundingBox::new(x0, y0, x0 + w, y0 + h).unwrap(), score, detector_id: "d".into(), timestamp: 0.0 }
    }

    #[test]
    fn nadir_footprint_is_the_projected_rectangle() {
        let (g, cam, _) = setup();
        // footprint at 10 m: 8 m x 6 m centered under the camera
        let cells = visible_cells(&g, &cam, &[], f64::INFINITY).unwrap();
        assert_eq!(cells.len(), 16 * 12);
        for idx in cells {
            let c = g.center(idx);
            assert!(c.x.abs() < 3.0 && c.y.abs() < 4.0);
        }
    }

    #[test]
    fn box_cells_are_skipped_by_the_sweep() {
        let (mut g, cam, m) = setup();
        // 0.6 m wide person at 10 m is 30 px
        let d = det(185.0, 100.0, 30.0, 50.0, 0.9);
        let out = update_from_frame(&mut g, std::slice::from_ref(&d), &cam, &m).unwrap();
        assert_eq!(out.hits.len(), 1);
        let hit = out.hits[0];
        assert!(hit.applied() && hit.p_area > 0.0);
        assert!(g.log_odds(hit.cell) > 0.0);
        assert_eq!(hit.cell, (60, 60));
        // image up is east at this heading: the cell east of the feet is behind the person
        let (u, v, _) = cam.project(&g.center((61, 60))).unwrap();
        assert!(d.bbox.contains(u, v));
        assert_eq!(g.log_odds((61, 60)), 0.0);
        assert!(g.log_odds((56, 60)) < 0.0);
    }

    #[test]
    fn out_of_window_box_is_a_noop() {
        let (mut g, cam, m) = setup();
        let tiny = det(195.0, 145.0, 2.0, 2.0, 1.0);
        let hit = positive_update(&mut g, &tiny, &cam, &m).unwrap().unwrap();
        assert_eq!(hit.p_area, 0.0);
        assert!(!hit.applied());
        assert!(g.is_empty());
    }

    #[test]
    fn saturated_update_is_shrunk() {
        let (mut g, cam, mut m) = setup();
        m.params.p_positive_max = 0.5;
        m.class.tukey_alpha = 0.0;
        let d = det(185.0, 100.0, 30.0, 50.0, 1.0);
        let hit = positive_update(&mut g, &d, &cam, &m).unwrap().unwrap();
        assert_eq!(hit.probability, 1.0 - crate::fusion::P_EPSILON);
        assert_eq!(g.log_odds(hit.cell), 3.5);
    }

    #[test]
    fn bad_inputs() {
        let (mut g, mut cam, m) = setup();
        let outside = Detection { bbox: BoundingBox::new(390.0, 0.0, 420.0, 10.0).unwrap(), ..det(0.0, 0.0, 1.0, 1.0, 0.5) };
        assert!(positive_update(&mut g, &outside, &cam, &m).is_err());
        cam.intrinsics.f_x = 0.0;
        assert!(negative_update(&mut g, &cam, &[], &[], &m).is_err());
    }
}
