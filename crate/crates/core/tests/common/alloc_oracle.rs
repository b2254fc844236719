//! Exhaustive reference solver for small allocation problems.
//!
//! Enumerates every x-vector (each stream/detector pair picks no bitrate or
//! exactly one), checks the constraints directly and decides schedule
//! existence by trying every offset combination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skit_core::allocation::{
    AllocationParams, AllocationProblem, Bandwidth, DetectorProfile, Machine, MachineKind, Site,
};

pub fn period(time_s: f64, rate: f64) -> u32 {
    let x = time_s * rate;
    ((x - 1e-9 * x.max(1.0)).ceil() as u32).max(1)
}

fn lcm(ps: &[u32]) -> usize {
    fn g(a: usize, b: usize) -> usize {
        if b == 0 { a } else { g(b, a % b) }
    }
    ps.iter().fold(1usize, |l, &p| l / g(l, p as usize) * p as usize)
}

/// Whether offsets exist covering each frame between 1 and `dpf` times.
pub fn schedulable(periods: &[u32], dpf: usize) -> bool {
    if periods.is_empty() {
        return false;
    }
    let h = lcm(periods);
    let total: usize = periods.iter().map(|&p| p as usize).product();
    for mut code in 0..total {
        let mut cover = vec![0usize; h];
        for &p in periods {
            let o = code % p as usize;
            code /= p as usize;
            let mut f = o;
            while f < h {
                cover[f] += 1;
                f += p as usize;
            }
        }
        if cover.iter().all(|&c| c >= 1 && c <= dpf) {
            return true;
        }
    }
    false
}

pub struct OracleResult {
    /// `None` when no feasible selection exists.
    pub best: Option<(f64, Vec<(usize, usize, usize)>)>,
    /// No detector passes the timing and reachability filter.
    pub nothing_usable: bool,
}

/// Brute-force optimum with the lexicographic tie rule on sorted
/// (stream, detector, bitrate) lists.
pub fn brute_force(p: &AllocationProblem) -> OracleResult {
    let prm = &p.params;
    let limit = prm.max_processing_time_s.min(prm.det_per_stream as f64 / prm.processing_frame_rate);
    let site_of = |d: usize| p.machines[p.detectors[d].machine].site;
    let usable: Vec<usize> = (0..p.detectors.len())
        .filter(|&d| p.detectors[d].time_s <= limit)
        .filter(|&d| p.links.iter().any(|row| row[site_of(d)] != Bandwidth::Unreachable))
        .collect();
    if usable.is_empty() {
        return OracleResult { best: None, nothing_usable: true };
    }
    let n_v = p.streams.len();
    let n_b = p.bitrates_kbps.len();
    let pairs: Vec<(usize, usize)> = (0..n_v).flat_map(|v| usable.iter().map(move |&d| (v, d))).collect();
    let base = n_b + 1;
    let total = base.pow(pairs.len() as u32);
    let big_m = p.sites.len().max(prm.det_per_stream);
    let mut best: Option<(f64, Vec<(usize, usize, usize)>)> = None;
    for mut code in 0..total {
        let mut sel = Vec::new();
        for &(v, d) in &pairs {
            let c = code % base;
            code /= base;
            if c > 0 {
                sel.push((v, d, c - 1));
            }
        }
        sel.sort();
        if !feasible(p, &sel) {
            continue;
        }
        let mut acc = 0.0;
        for &(_, d, b) in &sel {
            let per = period(p.detectors[d].time_s, prm.processing_frame_rate);
            acc += p.bitrates_kbps[b] / per as f64 * p.detectors[d].accuracy[b];
        }
        let mut penalty = 0u32;
        for v in 0..n_v {
            for s in 0..p.sites.len() {
                let n = sel.iter().filter(|&&(sv, d, _)| sv == v && site_of(d) == s).count();
                penalty += n.div_ceil(big_m) as u32;
            }
        }
        let obj = acc * prm.w - penalty as f64 * (1.0 - prm.w);
        let tol = best.as_ref().map_or(0.0, |(b, _)| 1e-9 * b.abs().max(1.0));
        let better = match &best {
            None => true,
            Some((b, s)) => obj > b + tol || (obj >= b - tol && sel < *s),
        };
        if better {
            best = Some((obj, sel));
        }
    }
    OracleResult { best, nothing_usable: false }
}

fn feasible(p: &AllocationProblem, sel: &[(usize, usize, usize)]) -> bool {
    let prm = &p.params;
    let site_of = |d: usize| p.machines[p.detectors[d].machine].site;
    for v in 0..p.streams.len() {
        let mine: Vec<_> = sel.iter().filter(|c| c.0 == v).collect();
        if mine.len() > prm.det_per_stream {
            return false;
        }
        let periods: Vec<u32> =
            mine.iter().map(|c| period(p.detectors[c.1].time_s, prm.processing_frame_rate)).collect();
        if !schedulable(&periods, prm.det_per_frame) {
            return false;
        }
        for s in 0..p.sites.len() {
            let load: f64 = mine
                .iter()
                .filter(|c| site_of(c.1) == s)
                .map(|c| p.bitrates_kbps[c.2] / period(p.detectors[c.1].time_s, prm.processing_frame_rate) as f64)
                .sum();
            let used = mine.iter().any(|c| site_of(c.1) == s);
            let ok = match p.links[v][s] {
                Bandwidth::IntraSite => true,
                Bandwidth::Unreachable => !used,
                Bandwidth::Kbps(cap) => load <= cap * (1.0 + 1e-9),
            };
            if !ok {
                return false;
            }
        }
    }
    for (m, machine) in p.machines.iter().enumerate() {
        let on: Vec<_> = sel.iter().filter(|c| p.detectors[c.1].machine == m).collect();
        if prm.exclusive_machines {
            if on.len() > 1 {
                return false;
            }
        } else {
            let ram: f64 = on.iter().map(|c| p.detectors[c.1].ram_mb).sum();
            if ram > machine.ram_mb * (1.0 + 1e-9) {
                return false;
            }
        }
    }
    true
}

/// Random instance with at most 3 streams, 2 detectors and 2 bitrates.
pub fn random_problem(seed: u64) -> AllocationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_v = rng.random_range(1..=3);
    let n_d = rng.random_range(1..=2);
    let n_b = rng.random_range(1..=2);
    let n_s = rng.random_range(1..=2);
    let n_m = rng.random_range(1..=2);
    let rate = 10.0;
    let sites = (0..n_s).map(|s| Site { id: format!("s{s}") }).collect();
    let machines = (0..n_m)
        .map(|m| Machine {
            id: format!("m{m}"),
            site: rng.random_range(0..n_s),
            ram_mb: rng.random_range(3..=8) as f64 * 1000.0,
            kind: MachineKind::Gpu,
        })
        .collect();
    let bitrates_kbps: Vec<f64> = if n_b == 1 { vec![1000.0] } else { vec![500.0, 2000.0] };
    let detectors = (0..n_d)
        .map(|d| {
            let per = [1.0, 1.0, 1.0, 2.0, 2.0, 3.0][rng.random_range(0..6)];
            let mut acc: Vec<f64> = (0..n_b).map(|_| (rng.random_range(1..=20) as f64) / 20.0).collect();
            acc.sort_by(f64::total_cmp);
            DetectorProfile {
                id: format!("d{d}"),
                machine: rng.random_range(0..n_m),
                time_s: (per - 0.5) / rate,
                ram_mb: rng.random_range(1..=2) as f64 * 1000.0,
                accuracy: acc,
            }
        })
        .collect();
    let links = (0..n_v)
        .map(|_| {
            (0..n_s)
                .map(|_| match rng.random_range(0..8) {
                    0 => Bandwidth::Unreachable,
                    1 => Bandwidth::IntraSite,
                    2 | 3 => Bandwidth::Kbps(600.0),
                    4 | 5 => Bandwidth::Kbps(1000.0),
                    _ => Bandwidth::Kbps(5000.0),
                })
                .collect()
        })
        .collect();
    let det_per_stream = [1, 2, 2, 3][rng.random_range(0..4)];
    AllocationProblem {
        streams: (0..n_v).map(|v| format!("v{v}")).collect(),
        sites,
        machines,
        detectors,
        bitrates_kbps,
        links,
        params: AllocationParams {
            processing_frame_rate: rate,
            max_processing_time_s: if rng.random_bool(0.9) { 1.0 } else { 0.2 },
            det_per_stream,
            det_per_frame: rng.random_range(1..=2),
            w: [0.0, 0.3, 0.6, 1.0][rng.random_range(0..4)],
            exclusive_machines: rng.random_bool(0.2),
        },
    }
}
