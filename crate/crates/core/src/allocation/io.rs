//! Problem and assignment files (TOML) and the Gantt-style schedule CSV.
//!
//! Problem layout:
//!
//! ```toml
//! [params]
//! processing_frame_rate = 10.0      # Hz
//! max_processing_time_ms = 1000.0
//! det_per_stream = 2
//! det_per_frame = 1
//! w = 0.6
//! exclusive_machines = false
//! accuracy_source = "olrp"          # or "ar"
//! bitrates_kbps = [5000.0, 20000.0]
//!
//! [streams]
//! ids = ["uav0"]
//!
//! [sites]
//! ids = ["uav0_onboard", "dc1"]
//!
//! [[machines]]
//! id = "dc1_gpu"
//! site = "dc1"
//! ram_mb = 11000.0
//! kind = "gpu"
//!
//! [[detectors]]
//! id = "frcnn_rn50@dc1_gpu"
//! machine = "dc1_gpu"
//! time_ms = 66.0
//! ram_mb = 2500.0
//! olrp = [0.71, 0.69]               # or ar = [...], or accuracy = [...]
//!
//! [[links]]
//! stream = "uav0"
//! site = "dc1"
//! kbps = 20000.0                    # "intra" inside the stream's own site
//! ```
//!
//! Missing links are unreachable.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::assignment::{Assignment, Choice};
use super::problem::{
    AllocationParams, AllocationProblem, Bandwidth, DetectorProfile, Machine, MachineKind, Site,
};
use super::AllocError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracySource {
    /// `1 − oLRP` per bitrate.
    #[default]
    Olrp,
    /// AR@[.5:.95] per bitrate.
    Ar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub processing_frame_rate: f64,
    pub max_processing_time_ms: f64,
    pub det_per_stream: usize,
    pub det_per_frame: usize,
    #[serde(default = "default_w")]
    pub w: f64,
    #[serde(default)]
    pub exclusive_machines: bool,
    #[serde(default)]
    pub accuracy_source: AccuracySource,
    pub bitrates_kbps: Vec<f64>,
}

fn default_w() -> f64 {
    0.6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdList {
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineFile {
    pub id: String,
    pub site: String,
    pub ram_mb: f64,
    pub kind: MachineKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorFile {
    pub id: String,
    pub machine: String,
    pub time_ms: f64,
    pub ram_mb: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub olrp: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkValue {
    Kbps(f64),
    Keyword(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkFile {
    pub stream: String,
    pub site: String,
    pub kbps: LinkValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub params: ParamsFile,
    pub streams: IdList,
    pub sites: IdList,
    #[serde(default)]
    pub machines: Vec<MachineFile>,
    #[serde(default)]
    pub detectors: Vec<DetectorFile>,
    #[serde(default)]
    pub links: Vec<LinkFile>,
}

fn lookup(ids: &HashMap<&str, usize>, what: &str, name: &str) -> Result<usize, AllocError> {
    ids.get(name)
        .copied()
        .ok_or_else(|| AllocError::Format(format!("unknown {what} {name:?}")))
}

fn index_of(names: &[String]) -> Result<HashMap<&str, usize>, AllocError> {
    let mut map = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.as_str(), i).is_some() {
            return Err(AllocError::Format(format!("duplicate id {n:?}")));
        }
    }
    Ok(map)
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<AllocationProblem, AllocError> {
        let stream_ix = index_of(&self.streams.ids)?;
        let site_ix = index_of(&self.sites.ids)?;
        let machine_names: Vec<String> = self.machines.iter().map(|m| m.id.clone()).collect();
        let machine_ix = index_of(&machine_names)?;
        let detector_names: Vec<String> = self.detectors.iter().map(|d| d.id.clone()).collect();
        index_of(&detector_names)?;

        let machines = self
            .machines
            .iter()
            .map(|m| {
                Ok(Machine {
                    id: m.id.clone(),
                    site: lookup(&site_ix, "site", &m.site)?,
                    ram_mb: m.ram_mb,
                    kind: m.kind,
                })
            })
            .collect::<Result<Vec<_>, AllocError>>()?;
        let source = self.params.accuracy_source;
        let detectors = self
            .detectors
            .iter()
            .map(|d| {
                let accuracy = match (&d.accuracy, source, &d.olrp, &d.ar) {
                    (Some(a), _, _, _) => a.clone(),
                    (None, AccuracySource::Olrp, Some(o), _) => o.iter().map(|x| 1.0 - x).collect(),
                    (None, AccuracySource::Ar, _, Some(a)) => a.clone(),
                    _ => {
                        return Err(AllocError::Format(format!(
                            "detector {:?} lacks accuracy values for source {source:?}",
                            d.id
                        )))
                    }
                };
                Ok(DetectorProfile {
                    id: d.id.clone(),
                    machine: lookup(&machine_ix, "machine", &d.machine)?,
                    time_s: d.time_ms / 1000.0,
                    ram_mb: d.ram_mb,
                    accuracy,
                })
            })
            .collect::<Result<Vec<_>, AllocError>>()?;
        let mut links = vec![vec![Bandwidth::Unreachable; self.sites.ids.len()]; self.streams.ids.len()];
        for l in &self.links {
            let v = lookup(&stream_ix, "stream", &l.stream)?;
            let s = lookup(&site_ix, "site", &l.site)?;
            links[v][s] = match &l.kbps {
                LinkValue::Kbps(k) if *k >= 0.0 => Bandwidth::from_kbps(*k),
                LinkValue::Keyword(k) if k == "intra" || k == "inf" => Bandwidth::IntraSite,
                other => return Err(AllocError::Format(format!("bad link value {other:?}"))),
            };
        }
        let p = &self.params;
        let problem = AllocationProblem {
            streams: self.streams.ids.clone(),
            sites: self.sites.ids.iter().map(|id| Site { id: id.clone() }).collect(),
            machines,
            detectors,
            bitrates_kbps: p.bitrates_kbps.clone(),
            links,
            params: AllocationParams {
                processing_frame_rate: p.processing_frame_rate,
                max_processing_time_s: p.max_processing_time_ms / 1000.0,
                det_per_stream: p.det_per_stream,
                det_per_frame: p.det_per_frame,
                w: p.w,
                exclusive_machines: p.exclusive_machines,
            },
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn from_problem(problem: &AllocationProblem) -> ProblemFile {
        let p = &problem.params;
        let mut links = Vec::new();
        for (v, row) in problem.links.iter().enumerate() {
            for (s, bw) in row.iter().enumerate() {
                let kbps = match bw {
                    Bandwidth::Unreachable => continue,
                    Bandwidth::Kbps(k) => LinkValue::Kbps(*k),
                    Bandwidth::IntraSite => LinkValue::Keyword("intra".into()),
                };
                links.push(LinkFile {
                    stream: problem.streams[v].clone(),
                    site: problem.sites[s].id.clone(),
                    kbps,
                });
            }
        }
        ProblemFile {
            params: ParamsFile {
                processing_frame_rate: p.processing_frame_rate,
                max_processing_time_ms: p.max_processing_time_s * 1000.0,
                det_per_stream: p.det_per_stream,
                det_per_frame: p.det_per_frame,
                w: p.w,
                exclusive_machines: p.exclusive_machines,
                accuracy_source: AccuracySource::Olrp,
                bitrates_kbps: problem.bitrates_kbps.clone(),
            },
            streams: IdList { ids: problem.streams.clone() },
            sites: IdList { ids: problem.sites.iter().map(|s| s.id.clone()).collect() },
            machines: problem
                .machines
                .iter()
                .map(|m| MachineFile {
                    id: m.id.clone(),
                    site: problem.sites[m.site].id.clone(),
                    ram_mb: m.ram_mb,
                    kind: m.kind,
                })
                .collect(),
            detectors: problem
                .detectors
                .iter()
                .map(|d| DetectorFile {
                    id: d.id.clone(),
                    machine: problem.machines[d.machine].id.clone(),
                    time_ms: d.time_s * 1000.0,
                    ram_mb: d.ram_mb,
                    accuracy: Some(d.accuracy.clone()),
                    olrp: None,
                    ar: None,
                })
                .collect(),
            links,
        }
    }
}

pub fn parse_problem(text: &str) -> Result<AllocationProblem, AllocError> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| AllocError::Format(e.to_string()))?;
    file.into_problem()
}

pub fn problem_to_toml(problem: &AllocationProblem) -> String {
    toml::to_string(&ProblemFile::from_problem(problem)).expect("problem serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiceFile {
    pub stream: String,
    pub detector: String,
    pub bitrate_level: usize,
    pub bitrate_kbps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkUseFile {
    pub stream: String,
    pub site: String,
    pub count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamSchedule {
    pub stream: String,
    /// Detector ids starting on each frame of the cycle.
    pub frames: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub objective: f64,
    #[serde(default = "default_true")]
    pub optimal: bool,
    pub horizon: usize,
    #[serde(default)]
    pub chosen: Vec<ChoiceFile>,
    #[serde(default)]
    pub links_used: Vec<LinkUseFile>,
    #[serde(default)]
    pub schedule: Vec<StreamSchedule>,
}

fn default_true() -> bool {
    true
}

pub fn assignment_to_toml(problem: &AllocationProblem, a: &Assignment, optimal: bool) -> String {
    let file = AssignmentFile {
        objective: a.objective,
        optimal,
        horizon: a.horizon,
        chosen: a
            .chosen
            .iter()
            .map(|c| ChoiceFile {
                stream: problem.streams[c.stream].clone(),
                detector: problem.detectors[c.detector].id.clone(),
                bitrate_level: c.bitrate,
                bitrate_kbps: problem.bitrates_kbps[c.bitrate],
            })
            .collect(),
        links_used: a
            .links_used
            .iter()
            .enumerate()
            .flat_map(|(v, row)| {
                row.iter().enumerate().filter(|(_, &n)| n > 0).map(move |(s, &n)| LinkUseFile {
                    stream: problem.streams[v].clone(),
                    site: problem.sites[s].id.clone(),
                    count: n,
                })
            })
            .collect(),
        schedule: a
            .schedule
            .iter()
            .enumerate()
            .map(|(v, frames)| StreamSchedule {
                stream: problem.streams[v].clone(),
                frames: frames
                    .iter()
                    .map(|f| f.iter().map(|&d| problem.detectors[d].id.clone()).collect())
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("assignment serializes")
}

/// Reads an assignment file against its problem. Returns the assignment and
/// its `optimal` flag.
pub fn parse_assignment(problem: &AllocationProblem, text: &str) -> Result<(Assignment, bool), AllocError> {
    let file: AssignmentFile = toml::from_str(text).map_err(|e| AllocError::Format(e.to_string()))?;
    let stream_ix = index_of(&problem.streams)?;
    let site_names: Vec<String> = problem.sites.iter().map(|s| s.id.clone()).collect();
    let site_ix = index_of(&site_names)?;
    let det_names: Vec<String> = problem.detectors.iter().map(|d| d.id.clone()).collect();
    let det_ix = index_of(&det_names)?;
    let mut a = Assignment::empty(problem.streams.len(), problem.sites.len());
    a.objective = file.objective;
    a.horizon = file.horizon;
    for c in &file.chosen {
        if c.bitrate_level >= problem.bitrates_kbps.len() {
            return Err(AllocError::Format(format!("bitrate level {} out of range", c.bitrate_level)));
        }
        a.chosen.push(Choice {
            stream: lookup(&stream_ix, "stream", &c.stream)?,
            detector: lookup(&det_ix, "detector", &c.detector)?,
            bitrate: c.bitrate_level,
        });
    }
    a.chosen.sort();
    for l in &file.links_used {
        let v = lookup(&stream_ix, "stream", &l.stream)?;
        let s = lookup(&site_ix, "site", &l.site)?;
        a.links_used[v][s] = l.count;
    }
    for row in &mut a.schedule {
        *row = vec![Vec::new(); file.horizon];
    }
    for s in &file.schedule {
        let v = lookup(&stream_ix, "stream", &s.stream)?;
        if s.frames.len() != file.horizon {
            return Err(AllocError::Format(format!(
                "stream {:?} lists {} frames for horizon {}",
                s.stream,
                s.frames.len(),
                file.horizon
            )));
        }
        for (f, dets) in s.frames.iter().enumerate() {
            let mut ids = dets
                .iter()
                .map(|d| lookup(&det_ix, "detector", d))
                .collect::<Result<Vec<_>, _>>()?;
            ids.sort_unstable();
            a.schedule[v][f] = ids;
        }
    }
    Ok((a, file.optimal))
}

/// One row per detector run: `stream,detector,machine,site,start_frame,
/// end_frame,period,bitrate_kbps`. `end_frame` is exclusive.
pub fn schedule_csv(problem: &AllocationProblem, a: &Assignment) -> String {
    let mut s = String::from("stream,detector,machine,site,start_frame,end_frame,period,bitrate_kbps\n");
    let rate = problem.params.processing_frame_rate;
    for (v, frames) in a.schedule.iter().enumerate() {
        for (f, dets) in frames.iter().enumerate() {
            for &d in dets {
                let det = &problem.detectors[d];
                let machine = &problem.machines[det.machine];
                let period = det.period(rate) as usize;
                let bitrate = a
                    .chosen
                    .iter()
                    .find(|c| c.stream == v && c.detector == d)
                    .map(|c| problem.bitrates_kbps[c.bitrate])
                    .unwrap_or(f64::NAN);
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    problem.streams[v],
                    det.id,
                    machine.id,
                    problem.sites[machine.site].id,
                    f,
                    f + period,
                    period,
                    bitrate
                );
            }
        }
    }
    s
}
