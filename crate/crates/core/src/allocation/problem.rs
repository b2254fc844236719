use serde::{Deserialize, Serialize};

use super::AllocError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachineKind {
    Cpu,
    Gpu,
}

/// A physical or virtual machine. A host with a GPU appears twice, once
/// per processing unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub id: String,
    pub site: usize,
    pub ram_mb: f64,
    pub kind: MachineKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: String,
}

/// Capacity of the link carrying one stream to one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// No connection.
    Unreachable,
    Kbps(f64),
    /// Transfer inside the site the stream originates from; never limiting.
    IntraSite,
}

impl Bandwidth {
    pub fn from_kbps(kbps: f64) -> Bandwidth {
        if kbps <= 0.0 {
            Bandwidth::Unreachable
        } else {
            Bandwidth::Kbps(kbps)
        }
    }

    pub fn admits(self, load_kbps: f64) -> bool {
        match self {
            Bandwidth::Unreachable => load_kbps <= 0.0,
            Bandwidth::Kbps(cap) => load_kbps <= cap,
            Bandwidth::IntraSite => true,
        }
    }

    pub fn is_reachable(self) -> bool {
        !matches!(self, Bandwidth::Unreachable)
    }
}

/// A characterized detector bound to the machine that runs it.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorProfile {
    pub id: String,
    pub machine: usize,
    /// Nominal (worst-case) execution time per frame.
    pub time_s: f64,
    pub ram_mb: f64,
    /// Accuracy per bitrate level, same order as the problem's bitrates.
    pub accuracy: Vec<f64>,
}

impl DetectorProfile {
    pub fn period(&self, frame_rate: f64) -> u32 {
        period_from_time(self.time_s, frame_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationParams {
    pub processing_frame_rate: f64,
    pub max_processing_time_s: f64,
    pub det_per_stream: usize,
    pub det_per_frame: usize,
    /// Weight of accuracy against the link penalty.
    pub w: f64,
    /// Replace the RAM budget by "each machine serves at most one
    /// (stream, detector) pair".
    pub exclusive_machines: bool,
}

impl Default for AllocationParams {
    fn default() -> Self {
        AllocationParams {
            processing_frame_rate: 30.0,
            max_processing_time_s: 1.0,
            det_per_stream: 1,
            det_per_frame: 1,
            w: 0.6,
            exclusive_machines: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    pub streams: Vec<String>,
    pub sites: Vec<Site>,
    pub machines: Vec<Machine>,
    pub detectors: Vec<DetectorProfile>,
    /// Ascending encoding bitrates.
    pub bitrates_kbps: Vec<f64>,
    /// `links[stream][site]`.
    pub links: Vec<Vec<Bandwidth>>,
    pub params: AllocationParams,
}

/// Frames a detector needs per processed frame: `ceil(time · rate)`, at
/// least 1. A relative slack of 1e-9 absorbs products such as
/// `(1/30) · 30` landing one ulp above an integer.
pub fn period_from_time(time_s: f64, rate_hz: f64) -> u32 {
    let frames = time_s * rate_hz;
    let p = (frames - 1e-9 * frames.max(1.0)).ceil();
    if p < 1.0 {
        1
    } else {
        p as u32
    }
}

impl AllocationProblem {
    pub fn validate(&self) -> Result<(), AllocError> {
        let bad = |m: String| Err(AllocError::InvalidProblem(m));
        let p = &self.params;
        if self.bitrates_kbps.is_empty() {
            return Err(AllocError::NoBitrates);
        }
        if self.bitrates_kbps.iter().any(|&b| !(b > 0.0))
            || self.bitrates_kbps.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("bitrates must be positive and strictly ascending".into());
        }
        if !(p.processing_frame_rate > 0.0) || !(p.max_processing_time_s > 0.0) {
            return bad("frame rate and max processing time must be positive".into());
        }
        if p.det_per_frame < 1 || p.det_per_stream < 1 {
            return bad("det_per_frame and det_per_stream must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&p.w) {
            return bad(format!("w = {} outside [0, 1]", p.w));
        }
        for m in &self.machines {
            if m.site >= self.sites.len() {
                return bad(format!("machine {} references unknown site", m.id));
            }
            if !(m.ram_mb > 0.0) {
                return bad(format!("machine {} needs positive ram", m.id));
            }
        }
        for d in &self.detectors {
            if d.machine >= self.machines.len() {
                return bad(format!("detector {} references unknown machine", d.id));
            }
            if !(d.time_s > 0.0) || !(d.ram_mb > 0.0) {
                return bad(format!("detector {} needs positive time and ram", d.id));
            }
            if d.accuracy.len() != self.bitrates_kbps.len() {
                return bad(format!(
                    "detector {} has {} accuracy values for {} bitrates",
                    d.id,
                    d.accuracy.len(),
                    self.bitrates_kbps.len()
                ));
            }
            if d.accuracy.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return bad(format!("detector {} accuracy outside [0, 1]", d.id));
            }
        }
        if self.links.len() != self.streams.len()
            || self.links.iter().any(|row| row.len() != self.sites.len())
        {
            return bad("link table must be streams x sites".into());
        }
        for row in &self.links {
            for bw in row {
                if let Bandwidth::Kbps(k) = bw {
                    if !(*k > 0.0) {
                        return bad("bandwidth must be positive".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// `min(maxProcessingTime, detPerStream / processingFrameRate)`.
    pub fn max_frame_time(&self) -> f64 {
        let p = &self.params;
        p.max_processing_time_s
            .min(p.det_per_stream as f64 / p.processing_frame_rate)
    }

    pub fn site_of(&self, detector: usize) -> usize {
        self.machines[self.detectors[detector].machine].site
    }

    pub fn period_of(&self, detector: usize) -> u32 {
        self.detectors[detector].period(self.params.processing_frame_rate)
    }

    pub fn bandwidth(&self, stream: usize, site: usize) -> Bandwidth {
        self.links[stream][site]
    }
}

/// Detectors usable in this problem: execution time within the max frame
/// time, and reachable from at least one stream. Indices ascend.
pub fn get_detectors(problem: &AllocationProblem) -> Vec<usize> {
    let limit = problem.max_frame_time();
    (0..problem.detectors.len())
        .filter(|&d| problem.detectors[d].time_s <= limit)
        .filter(|&d| {
            let site = problem.site_of(d);
            (0..problem.streams.len()).any(|v| problem.bandwidth(v, site).is_reachable())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periods() {
        // 263 ms on the datacenter GPU at 15 Hz
        assert_eq!(period_from_time(0.263, 15.0), 4);
        assert_eq!(period_from_time(0.0333, 30.0), 1);
        assert_eq!(period_from_time(1.0 / 30.0, 30.0), 1);
        assert_eq!(period_from_time(21.030, 30.0), 631);
        assert_eq!(period_from_time(21.030, 15.0), 316);
        assert_eq!(period_from_time(1e-6, 30.0), 1);
        assert_eq!(period_from_time(0.2, 10.0), 2);
    }

    #[test]
    fn shipped_period_table_matches_15hz() {
        // (network, [cpu A, B, C, D, gpu B, C, D] in ms, expected periods)
        #[rustfmt::skip]
        let table: [(&str, [f64; 7], [u32; 7]); 10] = [
            ("frcnn_irv2", [21030.0, 15487.0, 13299.0, 12969.0, 801.0, 390.0, 263.0], [316, 233, 200, 195, 13, 6, 4]),
            ("frcnn_irv2_lp", [8012.0, 6412.0, 5403.0, 5270.0, 395.0, 207.0, 149.0], [121, 97, 82, 80, 6, 4, 3]),
            ("frcnn_rn101", [3493.0, 2509.0, 2130.0, 2057.0, 130.0, 79.0, 69.0], [53, 38, 32, 31, 2, 2, 2]),
            ("frcnn_rn101_lp", [2259.0, 1673.0, 1418.0, 1344.0, 102.0, 64.0, 55.0], [34, 26, 22, 21, 2, 1, 1]),
            ("frcnn_rn50", [2610.0, 1860.0, 1594.0, 1567.0, 104.0, 66.0, 61.0], [40, 28, 24, 24, 2, 1, 1]),
            ("frcnn_rn50_lp", [1372.0, 1025.0, 882.0, 860.0, 64.0, 51.0, 48.0], [21, 16, 14, 13, 1, 1, 1]),
            ("rfcn_rn101", [2956.0, 2157.0, 1813.0, 1725.0, 123.0, 75.0, 67.0], [45, 33, 28, 26, 2, 2, 2]),
            ("ssd_incv2", [118.0, 88.0, 81.0, 86.0, 27.0, 29.0, 34.0], [2, 2, 2, 2, 1, 1, 1]),
            ("ssd_mnv2", [68.0, 61.0, 53.0, 65.0, 25.0, 26.0, 35.0], [2, 1, 1, 1, 1, 1, 1]),
            ("ssd_rn50", [1990.0, 1461.0, 1192.0, 1186.0, 80.0, 50.0, 56.0], [30, 22, 18, 18, 2, 1, 1]),
        ];
        for (name, times, periods) in table {
            let got: Vec<u32> = times.iter().map(|t| period_from_time(t / 1000.0, 15.0)).collect();
            assert_eq!(got, periods.to_vec(), "{name}");
        }
    }

    fn with_times(times: &[f64], max_processing_time_s: f64, dps: usize) -> AllocationProblem {
        AllocationProblem {
            streams: vec!["v".into()],
            sites: vec![Site { id: "s".into() }],
            machines: vec![Machine { id: "m".into(), site: 0, ram_mb: 1000.0, kind: MachineKind::Gpu }],
            detectors: times
                .iter()
                .enumerate()
                .map(|(i, &t)| DetectorProfile {
                    id: format!("d{i}"),
                    machine: 0,
                    time_s: t,
                    ram_mb: 10.0,
                    accuracy: vec![0.5],
                })
                .collect(),
            bitrates_kbps: vec![1000.0],
            links: vec![vec![Bandwidth::IntraSite]],
            params: AllocationParams {
                processing_frame_rate: 30.0,
                max_processing_time_s,
                det_per_stream: dps,
                ..Default::default()
            },
        }
    }

    #[test]
    fn detector_filter() {
        let p = with_times(&[0.02, 0.0333, 0.034, 0.09, 0.2], 0.1, 1);
        assert_eq!(p.max_frame_time(), 1.0 / 30.0);
        assert_eq!(get_detectors(&p), vec![0, 1]);
        let p5 = with_times(&[0.02, 0.0333, 0.034, 0.09, 0.2], 1.0, 5);
        assert_eq!(p5.max_frame_time(), 5.0 / 30.0);
        assert_eq!(get_detectors(&p5), vec![0, 1, 2, 3]);
        assert!(get_detectors(&with_times(&[0.5, 0.9], 0.1, 1)).is_empty());
        let mut unreachable = with_times(&[0.02], 1.0, 1);
        unreachable.links[0][0] = Bandwidth::Unreachable;
        assert!(get_detectors(&unreachable).is_empty());
    }
}
