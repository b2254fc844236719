use super::scenario::Scenario;
use super::SimError;
use crate::allocation::{AllocationProblem, Assignment};
use crate::fusion::relative_fidelity;

/// Replaces the scenario's detectors by the ones an allocation chose for
/// `stream`, at the allocation's processing rate.
///
/// Problem detector ids are matched to scenario detectors by profile: the
/// part of the id before an `@` (so `frcnn_rn50@gpu_d1` instantiates the
/// `frcnn_rn50` profile). Period and offset come from the cyclic schedule;
/// relative fidelity is the chosen accuracy over the best accuracy in the
/// problem; hit rates are scaled by the chosen accuracy over the detector's
/// best accuracy across bitrates.
pub fn apply_assignment(
    scenario: &Scenario,
    problem: &AllocationProblem,
    assignment: &Assignment,
    stream: usize,
) -> Result<Scenario, SimError> {
    if stream >= problem.streams.len() || stream >= assignment.schedule.len() {
        return Err(SimError::Coupling(format!("stream {stream} not in the assignment")));
    }
    let pool: Vec<f64> = problem.detectors.iter().flat_map(|d| d.accuracy.iter().copied()).collect();
    let mut out = scenario.clone();
    out.frame_rate = problem.params.processing_frame_rate;
    out.detectors.clear();
    for c in assignment.chosen.iter().filter(|c| c.stream == stream) {
        let det = &problem.detectors[c.detector];
        let profile = det.id.split('@').next().unwrap_or(&det.id);
        let spec = scenario
            .detectors
            .iter()
            .find(|s| s.profile() == profile)
            .ok_or_else(|| SimError::Coupling(format!("no synthetic detector for profile `{profile}`")))?;
        let period = problem.period_of(c.detector);
        let first = assignment.schedule[stream]
            .iter()
            .position(|f| f.contains(&c.detector))
            .ok_or_else(|| SimError::Coupling(format!("detector `{}` never scheduled", det.id)))?;
        let acc = det.accuracy[c.bitrate];
        let best_own = det.accuracy.iter().copied().fold(0.0, f64::max);
        let mut s = spec.clone();
        s.id = det.id.clone();
        s.profile = Some(profile.to_string());
        s.accuracy = acc;
        s.p_det_rel = Some(relative_fidelity(acc, &pool));
        s.quality = if best_own > 0.0 { acc / best_own } else { 0.0 };
        s.period = period;
        s.offset = first as u32 % period;
        out.detectors.push(s);
    }
    out.validate()?;
    Ok(out)
}
