use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};

use super::terrain::Terrain;
use super::FusionError;

/// Column index (ix, iy) of a 2.5D cell.
pub type CellIndex = (i64, i64);

/// Default log-odds clamp, P in about [0.029, 0.971].
pub const DEFAULT_CLAMP: (f64, f64) = (-3.5, 3.5);

/// Bisection stops once the bracket is shorter than this, meters.
const RAY_TOLERANCE: f64 = 0.01;

pub fn log_odds(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn probability(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}

/// `clamp(l_old + log(p / (1 - p)))`. Fails when `p` is not strictly
/// between 0 and 1.
pub fn log_odds_update(l_old: f64, p: f64, clamp: (f64, f64)) -> Result<f64, FusionError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(FusionError::InvalidProbability(p));
    }
    Ok((l_old + log_odds(p)).clamp(clamp.0, clamp.1))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cell {
    pub log_odds: f64,
    /// World points of the detections that hit this cell.
    pub points: Vec<Point3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub cell: CellIndex,
    pub point: Point3<f64>,
    pub distance: f64,
}

/// Sparse saliency grid with one cell per terrain column. Each column is a
/// flat tile at the terrain height sampled at its center; rays are cast
/// against these tiles, so the surface approximation coarsens with the
/// resolution.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    resolution: f64,
    origin: (f64, f64),
    nx: i64,
    ny: i64,
    heights: Vec<f64>,
    min_height: f64,
    max_height: f64,
    clamp: (f64, f64),
    terrain: Terrain,
    cells: BTreeMap<CellIndex, Cell>,
}

impl VoxelGrid {
    pub fn new(terrain: Terrain, resolution: f64) -> Result<Self, FusionError> {
        Self::with_clamp(terrain, resolution, DEFAULT_CLAMP)
    }

    pub fn with_clamp(terrain: Terrain, resolution: f64, clamp: (f64, f64)) -> Result<Self, FusionError> {
        terrain.validate()?;
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(FusionError::InvalidGrid(format!("resolution {resolution}")));
        }
        if !(clamp.0 < 0.0 && clamp.1 > 0.0) {
            return Err(FusionError::InvalidGrid("clamp bounds must straddle 0".into()));
        }
        let e = terrain.extents;
        let nx = ((e.x_max - e.x_min) / resolution - 1e-9).ceil().max(1.0) as i64;
        let ny = ((e.y_max - e.y_min) / resolution - 1e-9).ceil().max(1.0) as i64;
        let mut heights = Vec::with_capacity((nx * ny) as usize);
        for iy in 0..ny {
            for ix in 0..nx {
                let x = e.x_min + (ix as f64 + 0.5) * resolution;
                let y = e.y_min + (iy as f64 + 0.5) * resolution;
                heights.push(terrain.height(x, y));
            }
        }
        let min_height = heights.iter().copied().fold(f64::INFINITY, f64::min);
        let max_height = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(VoxelGrid {
            resolution,
            origin: (e.x_min, e.y_min),
            nx,
            ny,
            heights,
            min_height,
            max_height,
            clamp,
            terrain,
            cells: BTreeMap::new(),
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn dims(&self) -> (i64, i64) {
        (self.nx, self.ny)
    }

    pub fn clamp(&self) -> (f64, f64) {
        self.clamp
    }

    pub fn terrain(&self) -> &Terrain {
        &self.terrain
    }

    pub fn contains(&self, idx: CellIndex) -> bool {
        idx.0 >= 0 && idx.1 >= 0 && idx.0 < self.nx && idx.1 < self.ny
    }

    pub fn index_of(&self, x: f64, y: f64) -> Option<CellIndex> {
        let ix = ((x - self.origin.0) / self.resolution).floor();
        let iy = ((y - self.origin.1) / self.resolution).floor();
        if !ix.is_finite() || !iy.is_finite() {
            return None;
        }
        let idx = (ix as i64, iy as i64);
        self.contains(idx).then_some(idx)
    }

    /// Height of the tile at a column.
    pub fn column_height(&self, idx: CellIndex) -> f64 {
        self.heights[(idx.1 * self.nx + idx.0) as usize]
    }

    /// Center of the tile's top face.
    pub fn center(&self, idx: CellIndex) -> Point3<f64> {
        Point3::new(
            self.origin.0 + (idx.0 as f64 + 0.5) * self.resolution,
            self.origin.1 + (idx.1 as f64 + 0.5) * self.resolution,
            self.column_height(idx),
        )
    }

    pub fn height_range(&self) -> (f64, f64) {
        (self.min_height, self.max_height)
    }

    pub fn log_odds(&self, idx: CellIndex) -> f64 {
        self.cells.get(&idx).map_or(0.0, |c| c.log_odds)
    }

    pub fn probability(&self, idx: CellIndex) -> f64 {
        probability(self.log_odds(idx))
    }

    pub fn cell(&self, idx: CellIndex) -> Option<&Cell> {
        self.cells.get(&idx)
    }

    /// Stored cells in index order. Cells never touched are implicitly at
    /// log-odds 0 and not listed.
    pub fn cells(&self) -> impl Iterator<Item = (CellIndex, &Cell)> {
        self.cells.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Applies one observation with probability `p` to a cell.
    pub fn update(&mut self, idx: CellIndex, p: f64) -> Result<f64, FusionError> {
        if !self.contains(idx) {
            return Err(FusionError::InvalidGrid(format!("cell {idx:?} outside the grid")));
        }
        let clamp = self.clamp;
        let cell = self.cells.entry(idx).or_default();
        cell.log_odds = log_odds_update(cell.log_odds, p, clamp)?;
        Ok(cell.log_odds)
    }

    /// Sets a cell's log-odds directly (clamped); used when re-importing.
    pub fn set_log_odds(&mut self, idx: CellIndex, l: f64) -> Result<(), FusionError> {
        if !self.contains(idx) || !l.is_finite() {
            return Err(FusionError::InvalidGrid(format!("cell {idx:?} with log-odds {l}")));
        }
        self.cells.entry(idx).or_default().log_odds = l.clamp(self.clamp.0, self.clamp.1);
        Ok(())
    }

    pub fn record_point(&mut self, idx: CellIndex, point: Point3<f64>) {
        if self.contains(idx) {
            self.cells.entry(idx).or_default().points.push(point);
        }
    }

    fn below(&self, p: &Point3<f64>) -> bool {
        self.index_of(p.x, p.y).is_some_and(|idx| p.z <= self.column_height(idx))
    }

    /// Distance along the ray at which it leaves the grid's horizontal
    /// bounds.
    fn exit_distance(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> f64 {
        let hi = (
            self.origin.0 + self.nx as f64 * self.resolution,
            self.origin.1 + self.ny as f64 * self.resolution,
        );
        let mut t = f64::INFINITY;
        for (o, d, lo, hi) in [(origin.x, dir.x, self.origin.0, hi.0), (origin.y, dir.y, self.origin.1, hi.1)] {
            if d > 0.0 {
                t = t.min((hi - o) / d);
            } else if d < 0.0 {
                t = t.min((lo - o) / d);
            }
        }
        t
    }

    /// First tile hit by a ray: march at half the resolution, then bisect
    /// to 1 cm. `None` when the ray leaves the grid without touching it.
    pub fn raycast(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<RayHit> {
        let n = dir.norm();
        if !(n > 0.0) || !origin.coords.iter().all(|v| v.is_finite()) {
            return None;
        }
        let dir = dir / n;
        if self.below(origin) {
            return None;
        }
        let mut t0 = 0.0;
        if origin.z > self.max_height {
            if dir.z >= 0.0 {
                return None;
            }
            t0 = (self.max_height - origin.z) / dir.z;
        }
        let mut t_end = self.exit_distance(origin, &dir);
        if dir.z < 0.0 {
            t_end = t_end.min((self.min_height - origin.z) / dir.z);
        }
        if !t_end.is_finite() {
            return None;
        }
        let step = self.resolution / 2.0;
        let at = |t: f64| origin + dir * t;
        let mut prev = t0;
        if self.below(&at(t0)) {
            return self.finish(origin, &dir, t0, t0);
        }
        let mut t = t0;
        while t < t_end + step {
            t += step;
            if self.below(&at(t)) {
                return self.finish(origin, &dir, prev, t);
            }
            prev = t;
        }
        None
    }

    fn finish(&self, origin: &Point3<f64>, dir: &Vector3<f64>, mut lo: f64, mut hi: f64) -> Option<RayHit> {
        while hi - lo > RAY_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if self.below(&(origin + dir * mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let point = origin + dir * hi;
        let cell = self.index_of(point.x, point.y)?;
        Some(RayHit { cell, point, distance: hi })
    }

    /// Whether some other tile blocks the line of sight from `eye` to the
    /// center of `target`.
    pub fn occluded(&self, eye: &Point3<f64>, target: CellIndex) -> bool {
        let c = self.center(target);
        let d = c - eye;
        let len = d.norm();
        if len == 0.0 {
            return false;
        }
        let dir = d / len;
        let mut t = 0.0;
        if eye.z > self.max_height && dir.z < 0.0 {
            t = (self.max_height - eye.z) / dir.z;
        }
        let step = self.resolution / 2.0;
        while t < len {
            let p = eye + dir * t;
            if let Some(idx) = self.index_of(p.x, p.y) {
                if idx != target && p.z < self.column_height(idx) - 1e-9 {
                    return true;
                }
            }
            t += step;
        }
        false
    }
}
