//! Salient locations: threshold the fused grid, cluster the surviving cell
//! centers by single linkage, and summarize each cluster.

use std::collections::VecDeque;
use std::fmt::Write;

use nalgebra::Point3;

use crate::fusion::{CellIndex, VoxelGrid};

pub const DEFAULT_THRESHOLD: f64 = 0.75;
pub const DEFAULT_LINK_DISTANCE: f64 = 2.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SalientError {
    #[error("threshold {0} outside (0.5, 1)")]
    InvalidThreshold(f64),
    #[error("link distance must be positive, got {0}")]
    InvalidLinkDistance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SalientLocation {
    pub position: Point3<f64>,
    /// Mean probability of the cluster's cells.
    pub probability: f64,
    pub cell_count: usize,
    pub cells: Vec<CellIndex>,
    /// Detection world points recorded on the cluster's cells.
    pub points: Vec<Point3<f64>>,
}

/// Cells with probability strictly above `threshold`, in index order.
pub fn threshold_grid(grid: &VoxelGrid, threshold: f64) -> Vec<CellIndex> {
    grid.cells().filter(|(idx, _)| grid.probability(*idx) > threshold).map(|(idx, _)| idx).collect()
}

/// Single-linkage connected components: two points share a cluster iff a
/// chain of links no longer than `max_link` joins them. Members ascend and
/// clusters are ordered by their first member.
pub fn euclidean_clusters(points: &[Point3<f64>], max_link: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label = vec![usize::MAX; n];
    let mut clusters = Vec::new();
    for seed in 0..n {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[seed] = id;
        let mut members = vec![seed];
        let mut queue = VecDeque::from([seed]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if label[j] == usize::MAX && (points[i] - points[j]).norm() <= max_link {
                    label[j] = id;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

pub fn salient_locations(
    grid: &VoxelGrid,
    threshold: f64,
    max_link: f64,
) -> Result<Vec<SalientLocation>, SalientError> {
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(SalientError::InvalidThreshold(threshold));
    }
    if !(max_link > 0.0) {
        return Err(SalientError::InvalidLinkDistance(max_link));
    }
    let cells = threshold_grid(grid, threshold);
    let centers: Vec<Point3<f64>> = cells.iter().map(|&c| grid.center(c)).collect();
    let mut out = Vec::new();
    for members in euclidean_clusters(&centers, max_link) {
        let idxs: Vec<CellIndex> = members.iter().map(|&m| cells[m]).collect();
        let probability = idxs.iter().map(|&c| grid.probability(c)).sum::<f64>() / idxs.len() as f64;
        let points: Vec<Point3<f64>> =
            idxs.iter().filter_map(|&c| grid.cell(c)).flat_map(|c| c.points.iter().copied()).collect();
        let position = if points.is_empty() { mean(members.iter().map(|&m| centers[m])) } else { mean(points.iter().copied()) };
        out.push(SalientLocation { position, probability, cell_count: idxs.len(), cells: idxs, points });
    }
    Ok(out)
}

fn mean(points: impl Iterator<Item = Point3<f64>>) -> Point3<f64> {
    let mut sum = nalgebra::Vector3::zeros();
    let mut n = 0usize;
    for p in points {
        sum += p.coords;
        n += 1;
    }
    Point3::from(sum / n.max(1) as f64)
}

pub const SALIENT_HEADER: &str = "x,y,z,probability,cell_count";

pub fn salient_to_csv(locations: &[SalientLocation]) -> String {
    let mut s = format!("{SALIENT_HEADER}\n");
    for l in locations {
        writeln!(s, "{},{},{},{},{}", l.position.x, l.position.y, l.position.z, l.probability, l.cell_count).unwrap();
    }
    s
}

/// Plain-text summary, one line per location.
pub fn salient_report(locations: &[SalientLocation]) -> String {
    let mut s = format!("{} salient location(s)\n", locations.len());
    for (i, l) in locations.iter().enumerate() {
        writeln!(
            s,
            "#{i}: ({:.2}, {:.2}, {:.2}) p={:.3} cells={} detections={}",
            l.position.x,
            l.position.y,
            l.position.z,
            l.probability,
            l.cell_count,
            l.points.len()
        )
        .unwrap();
    }
    s
}
