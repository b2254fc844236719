use std::path::PathBuf;

use skit_core::allocation::{
    io::parse_problem, AllocationParams, AllocationProblem, Bandwidth, DetectorProfile, Machine, MachineKind, Site,
};
use skit_core::sim::Scenario;

/// 40 detectors on 40 machines over 4 sites, 9 bitrates, every period 1.
pub fn sizing_problem(n_streams: usize) -> AllocationProblem {
    let sites: Vec<Site> = (0..4).map(|s| Site { id: format!("s{s}") }).collect();
    let machines = (0..40)
        .map(|m| Machine { id: format!("m{m}"), site: m % 4, ram_mb: 8000.0, kind: MachineKind::Gpu })
        .collect();
    let detectors = (0..40)
        .map(|d| DetectorProfile { id: format!("d{d}"), machine: d, time_s: 0.02, ram_mb: 1000.0, accuracy: vec![0.5; 9] })
        .collect();
    AllocationProblem {
        streams: (0..n_streams).map(|v| format!("v{v}")).collect(),
        sites,
        machines,
        detectors,
        bitrates_kbps: vec![50.0, 75.0, 100.0, 250.0, 500.0, 1000.0, 2500.0, 5000.0, 20000.0],
        links: vec![vec![Bandwidth::Kbps(20000.0); 4]; n_streams],
        params: AllocationParams { processing_frame_rate: 30.0, ..Default::default() },
    }
}

/// One stream, four detectors allowed. Two period-2 detectors tile every
/// frame; a period-4 one can only join when frames may be processed twice;
/// a period-3 one sets the 12-frame horizon and never fits.
pub fn two_allocations_problem(det_per_frame: usize) -> AllocationProblem {
    let periods = [(2.0, 0.8), (2.0, 0.7), (4.0, 0.9), (3.0, 0.6)];
    let rate = 10.0;
    let machines = (0..4).map(|m| Machine { id: format!("m{m}"), site: 0, ram_mb: 8000.0, kind: MachineKind::Gpu }).collect();
    let detectors = periods
        .iter()
        .enumerate()
        .map(|(i, &(per, acc))| DetectorProfile {
            id: format!("d{i}"),
            machine: i,
            time_s: (per - 0.5) / rate,
            ram_mb: 1000.0,
            accuracy: vec![acc],
        })
        .collect();
    AllocationProblem {
        streams: vec!["uav0".into()],
        sites: vec![Site { id: "dc".into() }],
        machines,
        detectors,
        bitrates_kbps: vec![5000.0],
        links: vec![vec![Bandwidth::Kbps(20000.0)]],
        params: AllocationParams {
            processing_frame_rate: rate,
            max_processing_time_s: 1.0,
            det_per_stream: 4,
            det_per_frame,
            w: 0.6,
            exclusive_machines: false,
        },
    }
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::from_toml(&std::fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}

pub fn problem(name: &str) -> AllocationProblem {
    parse_problem(&std::fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}
