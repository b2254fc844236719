use serde::{Deserialize, Serialize};

use super::ilp::IlpInstance;
use super::schedule::{find_offsets, get_lcm, start_frames};

/// One selected `(stream, detector, bitrate level)` triple. Detector is the
/// problem index, bitrate the level index. Ordering is lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Choice {
    pub stream: usize,
    pub detector: usize,
    pub bitrate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Sorted ascending.
    pub chosen: Vec<Choice>,
    /// Length of the cyclic schedule in frames; 0 for an empty assignment.
    pub horizon: usize,
    /// `schedule[stream][frame]`: detectors starting on that frame, ascending.
    pub schedule: Vec<Vec<Vec<usize>>>,
    /// `links_used[stream][site]`.
    pub links_used: Vec<Vec<u32>>,
    pub objective: f64,
}

/// `acc_obj · w − penalty · (1 − w)`.
pub fn combine_objective(acc_obj: f64, penalty: u32, w: f64) -> f64 {
    acc_obj * w - penalty as f64 * (1.0 - w)
}

/// Smallest integer `l` with `count ≤ big_m · l`.
pub fn link_count(count: usize, big_m: usize) -> u32 {
    count.div_ceil(big_m.max(1)) as u32
}

impl Assignment {
    pub fn empty(n_streams: usize, n_sites: usize) -> Assignment {
        Assignment {
            chosen: Vec::new(),
            horizon: 0,
            schedule: vec![Vec::new(); n_streams],
            links_used: vec![vec![0; n_sites]; n_streams],
            objective: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn penalty(&self) -> u32 {
        self.links_used.iter().flatten().sum()
    }

    /// Detectors chosen for one stream, ascending.
    pub fn detectors_of(&self, stream: usize) -> Vec<usize> {
        self.chosen.iter().filter(|c| c.stream == stream).map(|c| c.detector).collect()
    }

    /// Builds the full assignment for a selection that is known to admit a
    /// schedule: derives offsets, link counts and the objective. Returns
    /// `None` when some stream cannot be scheduled.
    pub(crate) fn from_choices(instance: &IlpInstance, mut chosen: Vec<Choice>) -> Option<Assignment> {
        chosen.sort();
        let layout = &instance.layout;
        let model = &instance.model;
        let pos = |d: usize| layout.detectors.binary_search(&d).ok();
        let horizon = layout.horizon;
        let mut schedule = vec![vec![Vec::new(); horizon]; layout.n_streams];
        let mut site_counts = vec![vec![0usize; layout.n_sites]; layout.n_streams];
        let mut acc_obj = 0.0;
        for c in &chosen {
            let dd = &model.detectors[pos(c.detector)?];
            site_counts[c.stream][dd.site] += 1;
            acc_obj += model.bitrates_kbps[c.bitrate] / dd.period as f64 * dd.accuracy[c.bitrate];
        }
        for (v, row) in schedule.iter_mut().enumerate() {
            let dets: Vec<usize> = chosen.iter().filter(|c| c.stream == v).map(|c| c.detector).collect();
            let periods: Vec<u32> = dets.iter().map(|&d| model.detectors[pos(d).unwrap()].period).collect();
            let cycle = get_lcm(&periods).ok()?;
            let offsets = find_offsets(&periods, cycle, model.det_per_frame)?;
            for ((&d, &p), &o) in dets.iter().zip(&periods).zip(&offsets) {
                for f in start_frames(p, o, horizon) {
                    row[f].push(d);
                }
            }
        }
        let links_used: Vec<Vec<u32>> = site_counts
            .iter()
            .map(|r| r.iter().map(|&c| link_count(c, model.link_big_m)).collect())
            .collect();
        let penalty = links_used.iter().flatten().sum();
        Some(Assignment {
            objective: combine_objective(acc_obj, penalty, model.w),
            chosen,
            horizon,
            schedule,
            links_used,
        })
    }

    /// Reads an assignment out of a full variable vector, for example one
    /// returned by an external solver. The schedule and link counts are
    /// taken verbatim from the `y` and `linkUsed` values.
    pub fn from_values(instance: &IlpInstance, values: &[f64]) -> Assignment {
        let layout = &instance.layout;
        let model = &instance.model;
        let on = |i: usize| values.get(i).copied().unwrap_or(0.0) > 0.5;
        let mut chosen = Vec::new();
        let mut schedule = vec![vec![Vec::new(); layout.horizon]; layout.n_streams];
        let mut acc_obj = 0.0;
        for v in 0..layout.n_streams {
            for (k, dd) in model.detectors.iter().enumerate() {
                for b in 0..layout.n_bitrates {
                    if on(layout.x(v, k, b)) {
                        chosen.push(Choice { stream: v, detector: dd.index, bitrate: b });
                        acc_obj += model.bitrates_kbps[b] / dd.period as f64 * dd.accuracy[b];
                    }
                }
                for f in 0..layout.horizon {
                    if on(layout.y(v, k, f)) {
                        schedule[v][f].push(dd.index);
                    }
                }
            }
        }
        let links_used: Vec<Vec<u32>> = (0..layout.n_streams)
            .map(|v| {
                (0..layout.n_sites)
                    .map(|s| values.get(layout.link(v, s)).copied().unwrap_or(0.0).round().max(0.0) as u32)
                    .collect()
            })
            .collect();
        let penalty = links_used.iter().flatten().sum();
        Assignment {
            objective: combine_objective(acc_obj, penalty, model.w),
            chosen,
            horizon: layout.horizon,
            schedule,
            links_used,
        }
    }

    /// The variable vector of this assignment in `instance`'s layout.
    pub fn to_values(&self, instance: &IlpInstance) -> Vec<f64> {
        let layout = &instance.layout;
        let mut values = vec![0.0; layout.n_vars()];
        let pos = |d: usize| layout.detectors.binary_search(&d).ok();
        for c in &self.chosen {
            if let Some(k) = pos(c.detector) {
                values[layout.x(c.stream, k, c.bitrate)] = 1.0;
            }
        }
        for (v, row) in self.schedule.iter().enumerate().take(layout.n_streams) {
            for (f, dets) in row.iter().enumerate().take(layout.horizon) {
                for &d in dets {
                    if let Some(k) = pos(d) {
                        values[layout.y(v, k, f)] = 1.0;
                    }
                }
            }
        }
        for (v, row) in self.links_used.iter().enumerate().take(layout.n_streams) {
            for (s, &l) in row.iter().enumerate().take(layout.n_sites) {
                values[layout.link(v, s)] = l as f64;
            }
        }
        values
    }
}
