use super::assignment::Assignment;
use super::ilp::ConstraintTag;
use super::problem::{AllocationProblem, Bandwidth};

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn period(time_s: f64, rate: f64) -> usize {
    let frames = time_s * rate;
    ((frames - 1e-9 * frames.max(1.0)).ceil() as usize).max(1)
}

/// Re-checks every constraint of the allocation program directly against
/// the raw problem data, and recomputes the objective.
///
/// Returns the violated tags, deduplicated and sorted; empty means the
/// assignment is valid. An empty assignment is valid only when no detector
/// is usable at all.
pub fn verify_assignment(problem: &AllocationProblem, a: &Assignment) -> Vec<ConstraintTag> {
    let mut tags = Vec::new();
    let p = &problem.params;
    let n_v = problem.streams.len();
    let n_s = problem.sites.len();
    let n_b = problem.bitrates_kbps.len();
    let big_m = n_s.max(p.det_per_stream);

    let shape_ok = a.schedule.len() == n_v
        && a.schedule.iter().all(|r| r.len() == a.horizon)
        && a.links_used.len() == n_v
        && a.links_used.iter().all(|r| r.len() == n_s)
        && a.chosen.iter().all(|c| c.stream < n_v && c.detector < problem.detectors.len() && c.bitrate < n_b)
        && a.schedule.iter().flatten().flatten().all(|&d| d < problem.detectors.len());
    if !shape_ok {
        return vec![ConstraintTag::Malformed];
    }

    // usable detectors and the horizon, computed from scratch
    let max_frame_time = p.max_processing_time_s.min(p.det_per_stream as f64 / p.processing_frame_rate);
    let usable: Vec<usize> = (0..problem.detectors.len())
        .filter(|&d| {
            let det = &problem.detectors[d];
            let site = problem.machines[det.machine].site;
            det.time_s <= max_frame_time && problem.links.iter().any(|row| row[site] != Bandwidth::Unreachable)
        })
        .collect();
    let per = |d: usize| period(problem.detectors[d].time_s, p.processing_frame_rate);
    if usable.is_empty() && a.chosen.is_empty() && a.schedule.iter().flatten().all(|f| f.is_empty()) {
        if a.links_used.iter().flatten().any(|&l| l != 0) || a.objective != 0.0 {
            tags.push(ConstraintTag::Objective);
        }
        return tags;
    }
    let horizon = usable.iter().fold(1usize, |l, &d| l / gcd(l, per(d)) * per(d));
    if a.horizon != horizon {
        tags.push(ConstraintTag::Horizon);
    }
    for c in &a.chosen {
        if !usable.contains(&c.detector) {
            tags.push(ConstraintTag::DetectorCompatibility);
        }
    }
    if a.schedule.iter().flatten().flatten().any(|d| !usable.contains(d)) {
        tags.push(ConstraintTag::DetectorCompatibility);
    }

    let mut sorted = a.chosen.clone();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0].stream == w[1].stream && w[0].detector == w[1].detector {
            if w[0].bitrate == w[1].bitrate {
                tags.push(ConstraintTag::Malformed);
            } else {
                tags.push(ConstraintTag::OneBitrate);
            }
        }
    }

    for v in 0..n_v {
        let mine: Vec<_> = sorted.iter().filter(|c| c.stream == v).collect();
        if mine.len() > p.det_per_stream {
            tags.push(ConstraintTag::DetPerStream);
        }
        for frame in &a.schedule[v] {
            if frame.is_empty() {
                tags.push(ConstraintTag::DetPerFrameMin);
            }
            if frame.len() > p.det_per_frame {
                tags.push(ConstraintTag::DetPerFrameMax);
            }
        }
        // sliding windows for every usable detector: chosen ones start
        // exactly once per window, unchosen ones never
        for &d in &usable {
            let x = mine.iter().filter(|c| c.detector == d).count();
            let pd = per(d);
            let starts: Vec<usize> =
                a.schedule[v].iter().map(|fr| fr.iter().filter(|&&e| e == d).count()).collect();
            if pd > a.horizon {
                if x > 0 || starts.iter().any(|&s| s > 0) {
                    tags.push(ConstraintTag::FrameTiming);
                }
                continue;
            }
            for k in 0..=(a.horizon - pd) {
                let in_window: usize = starts[k..k + pd].iter().sum();
                if in_window != x {
                    tags.push(ConstraintTag::FrameTiming);
                    break;
                }
            }
        }
        for s in 0..n_s {
            let at_site: Vec<_> = mine
                .iter()
                .filter(|c| problem.machines[problem.detectors[c.detector].machine].site == s)
                .collect();
            let load: f64 = at_site
                .iter()
                .map(|c| problem.bitrates_kbps[c.bitrate] / per(c.detector) as f64)
                .sum();
            let ok = match problem.links[v][s] {
                Bandwidth::IntraSite => true,
                Bandwidth::Unreachable => at_site.is_empty(),
                Bandwidth::Kbps(cap) => load <= cap * (1.0 + 1e-9),
            };
            if !ok {
                tags.push(ConstraintTag::Bandwidth);
            }
            if at_site.len() > big_m * a.links_used[v][s] as usize || a.links_used[v][s] as usize > n_s {
                tags.push(ConstraintTag::LinkUsed);
            }
        }
    }

    for (m, machine) in problem.machines.iter().enumerate() {
        let on_m = sorted.iter().filter(|c| problem.detectors[c.detector].machine == m);
        if p.exclusive_machines {
            if on_m.count() > 1 {
                tags.push(ConstraintTag::ExclusiveMachine);
            }
        } else {
            let ram: f64 = on_m.map(|c| problem.detectors[c.detector].ram_mb).sum();
            if ram > machine.ram_mb * (1.0 + 1e-9) {
                tags.push(ConstraintTag::Ram);
            }
        }
    }

    let mut acc_obj = 0.0;
    for c in &sorted {
        acc_obj += problem.bitrates_kbps[c.bitrate] / per(c.detector) as f64
            * problem.detectors[c.detector].accuracy[c.bitrate];
    }
    let penalty: u32 = a.links_used.iter().flatten().sum();
    let objective = acc_obj * p.w - penalty as f64 * (1.0 - p.w);
    if (objective - a.objective).abs() > 1e-9 * objective.abs().max(1.0) {
        tags.push(ConstraintTag::Objective);
    }

    tags.sort();
    tags.dedup();
    tags
}
