use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::assignment::{link_count, Assignment, Choice};
use super::ilp::IlpInstance;
use super::schedule::{find_offsets, get_lcm};

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    /// Proven optimal.
    Optimal(Assignment),
    /// Time budget exhausted; best assignment found so far, not proven optimal.
    Incumbent(Assignment),
    Infeasible,
    /// Time budget exhausted before any feasible assignment was found.
    TimedOut,
}

impl SolveOutcome {
    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            SolveOutcome::Optimal(a) | SolveOutcome::Incumbent(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, SolveOutcome::Optimal(_))
    }
}

/// A backend able to solve a built instance.
pub trait IlpSolver {
    fn solve(&self, instance: &IlpInstance, time_budget: Option<Duration>) -> SolveOutcome;
}

/// Exact depth-first branch and bound over the `x` variables. Frame
/// schedules are checked per stream by an exhaustive offset search once all
/// of the stream's detectors are decided.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl IlpSolver for BranchAndBound {
    fn solve(&self, instance: &IlpInstance, time_budget: Option<Duration>) -> SolveOutcome {
        solve_ilp(instance, time_budget)
    }
}

pub fn solve_ilp(instance: &IlpInstance, time_budget: Option<Duration>) -> SolveOutcome {
    let mut search = Search::new(instance, time_budget.map(|t| Instant::now() + t));
    search.dfs(0);
    let best = search.best.take().and_then(|(_, chosen)| Assignment::from_choices(instance, chosen));
    match (best, search.aborted) {
        (Some(a), false) => SolveOutcome::Optimal(a),
        (Some(a), true) => SolveOutcome::Incumbent(a),
        (None, false) => SolveOutcome::Infeasible,
        (None, true) => SolveOutcome::TimedOut,
    }
}

struct Item {
    stream: usize,
    k: usize,
    /// (bitrate level, gain, bandwidth load), highest gain first.
    options: Vec<(usize, f64, f64)>,
    best_gain: f64,
}

struct Search<'a> {
    inst: &'a IlpInstance,
    items: Vec<Item>,
    /// First item index of each stream, plus a final sentinel.
    stream_start: Vec<usize>,
    /// Σ over streams after `v` of their optimistic top gains.
    future_bound: Vec<f64>,
    count: Vec<usize>,
    coverage: Vec<f64>,
    bw_load: Vec<Vec<f64>>,
    machine_load: Vec<f64>,
    site_count: Vec<Vec<usize>>,
    acc_sum: f64,
    chosen: Vec<Choice>,
    feasible_cache: HashMap<Vec<u32>, bool>,
    best: Option<(f64, Vec<Choice>)>,
    deadline: Option<Instant>,
    nodes: u64,
    aborted: bool,
}

fn top_sum(mut gains: Vec<f64>, n: usize) -> f64 {
    gains.sort_by(|a, b| b.total_cmp(a));
    gains.iter().take(n).sum()
}

impl<'a> Search<'a> {
    fn new(inst: &'a IlpInstance, deadline: Option<Instant>) -> Self {
        let m = &inst.model;
        let l = &inst.layout;
        let mut items = Vec::new();
        let mut stream_start = Vec::with_capacity(l.n_streams + 1);
        for v in 0..l.n_streams {
            stream_start.push(items.len());
            for (k, dd) in m.detectors.iter().enumerate() {
                let bw = m.links[v][dd.site];
                let fits_machine = m.exclusive_machines || dd.ram_mb <= m.machine_ram_mb[dd.machine];
                let mut options: Vec<(usize, f64, f64)> = (0..l.n_bitrates)
                    .filter_map(|b| {
                        let load = m.bitrates_kbps[b] / dd.period as f64;
                        let gain = load * dd.accuracy[b];
                        (fits_machine && bw.is_reachable() && bw.admits(load)).then_some((b, gain, load))
                    })
                    .collect();
                options.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                if options.is_empty() {
                    continue;
                }
                let best_gain = options[0].1;
                items.push(Item { stream: v, k, options, best_gain });
            }
        }
        stream_start.push(items.len());
        let mut future_bound = vec![0.0; l.n_streams + 1];
        for v in (0..l.n_streams).rev() {
            let gains = items[stream_start[v]..stream_start[v + 1]].iter().map(|it| it.best_gain).collect();
            future_bound[v] = future_bound[v + 1] + top_sum(gains, m.det_per_stream);
        }
        Search {
            inst,
            items,
            stream_start,
            future_bound,
            count: vec![0; l.n_streams],
            coverage: vec![0.0; l.n_streams],
            bw_load: vec![vec![0.0; l.n_sites]; l.n_streams],
            machine_load: vec![0.0; m.machine_ram_mb.len()],
            site_count: vec![vec![0; l.n_sites]; l.n_streams],
            acc_sum: 0.0,
            chosen: Vec::new(),
            feasible_cache: HashMap::new(),
            best: None,
            deadline,
            nodes: 0,
            aborted: false,
        }
    }

    fn penalty(&self) -> u32 {
        let big_m = self.inst.model.link_big_m;
        self.site_count.iter().flatten().map(|&c| link_count(c, big_m)).sum()
    }

    fn tol(&self) -> f64 {
        self.best.as_ref().map_or(0.0, |(b, _)| 1e-9 * b.abs().max(1.0))
    }

    fn stream_schedulable(&mut self, v: usize) -> bool {
        let model = &self.inst.model;
        let mut periods: Vec<u32> = self
            .chosen
            .iter()
            .filter(|c| c.stream == v)
            .map(|c| model.detectors[self.inst.layout.detectors.binary_search(&c.detector).unwrap()].period)
            .collect();
        periods.sort_unstable();
        if let Some(&ok) = self.feasible_cache.get(&periods) {
            return ok;
        }
        let ok = match get_lcm(&periods) {
            Ok(cycle) => find_offsets(&periods, cycle, model.det_per_frame).is_some(),
            Err(_) => false,
        };
        self.feasible_cache.insert(periods, ok);
        ok
    }

    fn upper_bound(&self, i: usize) -> f64 {
        let m = &self.inst.model;
        let optimistic = if i < self.items.len() {
            let v = self.items[i].stream;
            let end = self.stream_start[v + 1];
            let room = m.det_per_stream - self.count[v];
            let gains = self.items[i..end].iter().map(|it| it.best_gain).collect();
            top_sum(gains, room) + self.future_bound[v + 1]
        } else {
            0.0
        };
        (self.acc_sum + optimistic) * m.w - self.penalty() as f64 * (1.0 - m.w)
    }

    fn dfs(&mut self, i: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes % 4096 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.aborted = true;
                    return;
                }
            }
        }
        // a stream is complete once the search moves past its last item
        let n_streams = self.inst.layout.n_streams;
        // (streams without any usable item fall in this range too)
        let lo = if i == 0 { 0 } else { self.items[i - 1].stream };
        let hi = if i < self.items.len() { self.items[i].stream } else { n_streams };
        for v in lo..hi {
            if !self.stream_schedulable(v) {
                return;
            }
        }
        if i == self.items.len() {
            self.offer();
            return;
        }
        if let Some((best, _)) = &self.best {
            if self.upper_bound(i) < best - self.tol() {
                return;
            }
        }

        let m = &self.inst.model;
        let (v, k) = (self.items[i].stream, self.items[i].k);
        let dd = &m.detectors[k];
        let (site, machine, period, ram) = (dd.site, dd.machine, dd.period, dd.ram_mb);
        let det_index = dd.index;
        let inv_p = 1.0 / period as f64;
        let last_of_stream = i + 1 == self.stream_start[v + 1];

        if self.count[v] < m.det_per_stream && self.coverage[v] + inv_p <= m.det_per_frame as f64 + 1e-12 {
            let machine_cost = if m.exclusive_machines { 1.0 } else { ram };
            let machine_cap = if m.exclusive_machines { 1.0 } else { m.machine_ram_mb[machine] };
            if self.machine_load[machine] + machine_cost <= machine_cap + 1e-9 * machine_cap {
                let n_opts = self.items[i].options.len();
                for o in 0..n_opts {
                    let (b, gain, load) = self.items[i].options[o];
                    let bw = self.inst.model.links[v][site];
                    if !bw.admits(self.bw_load[v][site] + load - 1e-9 * load.max(1.0)) {
                        continue;
                    }
                    self.count[v] += 1;
                    self.coverage[v] += inv_p;
                    self.bw_load[v][site] += load;
                    self.machine_load[machine] += machine_cost;
                    self.site_count[v][site] += 1;
                    self.acc_sum += gain;
                    self.chosen.push(Choice { stream: v, detector: det_index, bitrate: b });
                    self.dfs(i + 1);
                    self.chosen.pop();
                    self.acc_sum -= gain;
                    self.site_count[v][site] -= 1;
                    self.machine_load[machine] -= machine_cost;
                    self.bw_load[v][site] -= load;
                    self.coverage[v] -= inv_p;
                    self.count[v] -= 1;
                    if self.aborted {
                        return;
                    }
                }
            }
        }
        // leave the item out; a stream needs coverage summing to at least 1
        let m = &self.inst.model;
        if last_of_stream && self.coverage[v] < 1.0 - 1e-12 {
            return;
        }
        if self.count[v] == m.det_per_stream && self.coverage[v] < 1.0 - 1e-12 {
            return;
        }
        self.dfs(i + 1);
    }

    fn offer(&mut self) {
        let m = &self.inst.model;
        let mut acc = 0.0;
        for c in &self.chosen {
            let dd = &m.detectors[self.inst.layout.detectors.binary_search(&c.detector).unwrap()];
            acc += m.bitrates_kbps[c.bitrate] / dd.period as f64 * dd.accuracy[c.bitrate];
        }
        let obj = super::assignment::combine_objective(acc, self.penalty(), m.w);
        let tol = self.tol();
        let better = match &self.best {
            None => true,
            Some((b, sel)) => obj > b + tol || (obj >= b - tol && self.chosen < *sel),
        };
        if better {
            self.best = Some((obj, self.chosen.clone()));
        }
    }
}
