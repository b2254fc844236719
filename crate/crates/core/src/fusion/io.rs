//! Grid export/import and camera pose records, both as CSV text.

use std::fmt::Write;

use nalgebra::{Point3, Quaternion, UnitQuaternion};

use super::grid::{CellIndex, VoxelGrid};
use super::FusionError;

pub const GRID_HEADER: &str = "ix,iy,x,y,z,log_odds,probability";
pub const POSE_HEADER: &str = "t,x,y,z,qw,qx,qy,qz";

fn parse_err(line: usize, msg: impl Into<String>) -> FusionError {
    FusionError::Parse { line, msg: msg.into() }
}

/// Stored cells with a `# resolution=` / `# origin=` preamble.
pub fn grid_to_csv(grid: &VoxelGrid) -> String {
    let mut s = String::new();
    let (ox, oy) = grid.origin();
    writeln!(s, "# resolution={}", grid.resolution()).unwrap();
    writeln!(s, "# origin={ox},{oy}").unwrap();
    writeln!(s, "{GRID_HEADER}").unwrap();
    for (idx, cell) in grid.cells() {
        let c = grid.center(idx);
        writeln!(s, "{},{},{},{},{},{},{}", idx.0, idx.1, c.x, c.y, c.z, cell.log_odds, grid.probability(idx)).unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSnapshot {
    pub resolution: f64,
    pub origin: (f64, f64),
    pub cells: Vec<(CellIndex, f64)>,
}

pub fn parse_grid_csv(text: &str) -> Result<GridSnapshot, FusionError> {
    let mut resolution = None;
    let mut origin = None;
    let mut cells = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("resolution=") {
                resolution = Some(v.trim().parse::<f64>().map_err(|e| parse_err(line_no, e.to_string()))?);
            } else if let Some(v) = meta.strip_prefix("origin=") {
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 2 {
                    return Err(parse_err(line_no, "origin needs two values"));
                }
                let x = parts[0].trim().parse::<f64>().map_err(|e| parse_err(line_no, e.to_string()))?;
                let y = parts[1].trim().parse::<f64>().map_err(|e| parse_err(line_no, e.to_string()))?;
                origin = Some((x, y));
            }
            continue;
        }
        if !seen_header {
            if line != GRID_HEADER {
                return Err(parse_err(line_no, format!("expected header `{GRID_HEADER}`")));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(parse_err(line_no, format!("expected 7 fields, got {}", f.len())));
        }
        let ix = f[0].trim().parse::<i64>().map_err(|e| parse_err(line_no, e.to_string()))?;
        let iy = f[1].trim().parse::<i64>().map_err(|e| parse_err(line_no, e.to_string()))?;
        let l = f[5].trim().parse::<f64>().map_err(|e| parse_err(line_no, e.to_string()))?;
        cells.push(((ix, iy), l));
    }
    let resolution = resolution.ok_or_else(|| parse_err(1, "missing `# resolution=`"))?;
    let origin = origin.ok_or_else(|| parse_err(1, "missing `# origin=`"))?;
    Ok(GridSnapshot { resolution, origin, cells })
}

/// Loads a snapshot into a grid built over the same terrain layout.
pub fn load_snapshot(grid: &mut VoxelGrid, snap: &GridSnapshot) -> Result<(), FusionError> {
    let (ox, oy) = grid.origin();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    if !close(snap.resolution, grid.resolution()) || !close(snap.origin.0, ox) || !close(snap.origin.1, oy) {
        return Err(FusionError::InvalidGrid(format!(
            "snapshot layout (res {}, origin {:?}) differs from grid (res {}, origin {:?})",
            snap.resolution,
            snap.origin,
            grid.resolution(),
            grid.origin()
        )));
    }
    for &(idx, l) in &snap.cells {
        grid.set_log_odds(idx, l)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub t: f64,
    pub position: Point3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

pub fn poses_to_csv(poses: &[PoseRecord]) -> String {
    let mut s = format!("{POSE_HEADER}\n");
    for p in poses {
        let q = p.orientation.quaternion();
        writeln!(s, "{},{},{},{},{},{},{},{}", p.t, p.position.x, p.position.y, p.position.z, q.w, q.i, q.j, q.k).unwrap();
    }
    s
}

pub fn parse_poses(text: &str) -> Result<Vec<PoseRecord>, FusionError> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != POSE_HEADER {
                return Err(parse_err(line_no, format!("expected header `{POSE_HEADER}`")));
            }
            seen_header = true;
            continue;
        }
        let v: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let v = v.map_err(|e| parse_err(line_no, e.to_string()))?;
        if v.len() != 8 {
            return Err(parse_err(line_no, format!("expected 8 fields, got {}", v.len())));
        }
        let q = Quaternion::new(v[4], v[5], v[6], v[7]);
        if !(q.norm() > 0.0) {
            return Err(parse_err(line_no, "zero quaternion"));
        }
        out.push(PoseRecord { t: v[0], position: Point3::new(v[1], v[2], v[3]), orientation: UnitQuaternion::from_quaternion(q) });
    }
    if out.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(parse_err(0, "pose timestamps must not decrease"));
    }
    Ok(out)
}
