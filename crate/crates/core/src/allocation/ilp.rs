use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::problem::{get_detectors, AllocationProblem, Bandwidth};
use super::schedule::get_lcm;
use super::AllocError;

/// Which family of constraints a row or a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintTag {
    DetPerStream,
    DetPerFrameMin,
    DetPerFrameMax,
    FrameTiming,
    Bandwidth,
    Ram,
    ExclusiveMachine,
    LinkUsed,
    /// At most one bitrate per (stream, detector).
    OneBitrate,
    Objective,
    Horizon,
    DetectorCompatibility,
    Malformed,
}

impl ConstraintTag {
    pub fn name(self) -> &'static str {
        match self {
            ConstraintTag::DetPerStream => "det_per_stream",
            ConstraintTag::DetPerFrameMin => "det_per_frame_min",
            ConstraintTag::DetPerFrameMax => "det_per_frame_max",
            ConstraintTag::FrameTiming => "frame_timing",
            ConstraintTag::Bandwidth => "bandwidth",
            ConstraintTag::Ram => "ram",
            ConstraintTag::ExclusiveMachine => "exclusive_machine",
            ConstraintTag::LinkUsed => "link_used",
            ConstraintTag::OneBitrate => "one_bitrate",
            ConstraintTag::Objective => "objective",
            ConstraintTag::Horizon => "horizon",
            ConstraintTag::DetectorCompatibility => "detector_compatibility",
            ConstraintTag::Malformed => "malformed",
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rhs {
    Value(f64),
    /// Intra-site link: the row never binds.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: ConstraintTag,
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: Rhs,
}

impl Constraint {
    pub fn holds(&self, values: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.terms.iter().map(|&(i, c)| c * values[i]).sum();
        match (self.sense, self.rhs) {
            (_, Rhs::Unbounded) => true,
            (Sense::Le, Rhs::Value(r)) => lhs <= r + tol,
            (Sense::Ge, Rhs::Value(r)) => lhs >= r - tol,
            (Sense::Eq, Rhs::Value(r)) => (lhs - r).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer { upper: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// Index arithmetic over the variable vector: all `x`, then all `y`, then
/// all `linkUsed`. Detector positions `k` refer to [`Layout::detectors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub n_streams: usize,
    /// Problem indices of the feasible detectors, ascending.
    pub detectors: Vec<usize>,
    pub n_bitrates: usize,
    pub horizon: usize,
    pub n_sites: usize,
}

impl Layout {
    fn n_x(&self) -> usize {
        self.n_streams * self.detectors.len() * self.n_bitrates
    }
    fn n_y(&self) -> usize {
        self.n_streams * self.detectors.len() * self.horizon
    }
    pub fn n_vars(&self) -> usize {
        self.n_x() + self.n_y() + self.n_streams * self.n_sites
    }
    pub fn x(&self, v: usize, k: usize, b: usize) -> usize {
        (v * self.detectors.len() + k) * self.n_bitrates + b
    }
    pub fn y(&self, v: usize, k: usize, f: usize) -> usize {
        self.n_x() + (v * self.detectors.len() + k) * self.horizon + f
    }
    pub fn link(&self, v: usize, s: usize) -> usize {
        self.n_x() + self.n_y() + v * self.n_sites + s
    }
}

/// Per-detector data the solver needs, detached from the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorData {
    pub index: usize,
    pub period: u32,
    pub machine: usize,
    pub site: usize,
    pub ram_mb: f64,
    pub accuracy: Vec<f64>,
}

/// Problem data in the form the built-in solver consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub detectors: Vec<DetectorData>,
    pub bitrates_kbps: Vec<f64>,
    pub links: Vec<Vec<Bandwidth>>,
    pub machine_ram_mb: Vec<f64>,
    pub det_per_stream: usize,
    pub det_per_frame: usize,
    pub w: f64,
    pub exclusive_machines: bool,
    /// Coefficient of `linkUsed` in the link-counting rows.
    pub link_big_m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpInstance {
    pub variables: Vec<Variable>,
    /// Maximized.
    pub objective: Vec<(usize, f64)>,
    /// The rows of the formulation, counted by [`problem_size`].
    pub constraints: Vec<Constraint>,
    /// Extra rows forbidding two bitrates for one (stream, detector) pair.
    /// The window equalities only imply this for period 1.
    pub supplementary: Vec<Constraint>,
    pub layout: Layout,
    pub model: Model,
}

impl IlpInstance {
    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * values[i]).sum()
    }

    /// Tags of every row (including supplementary ones) violated by a
    /// full variable vector, deduplicated and sorted.
    pub fn violations(&self, values: &[f64]) -> Vec<ConstraintTag> {
        let mut tags: Vec<_> = self
            .constraints
            .iter()
            .chain(&self.supplementary)
            .filter(|c| !c.holds(values, 1e-9))
            .map(|c| c.tag)
            .collect();
        tags.sort();
        tags.dedup();
        tags
    }
}

/// `max(|S|, detPerStream)`: large enough that one `linkUsed` unit covers
/// every detector a stream may use at a site, so the optimum sets it to 0
/// or 1.
pub fn link_big_m(problem: &AllocationProblem) -> usize {
    problem.sites.len().max(problem.params.det_per_stream)
}

/// Detectors and horizon shared by sizing and building.
fn feasible_set(problem: &AllocationProblem) -> Result<(Vec<usize>, usize), AllocError> {
    problem.validate()?;
    let detectors = get_detectors(problem);
    let periods: Vec<u32> = detectors.iter().map(|&d| problem.period_of(d)).collect();
    let horizon = get_lcm(&periods)?;
    Ok((detectors, horizon))
}

/// Variable and constraint counts from the closed-form expressions:
/// `|V|·(|D|·(|B|+|F|)+|S|)` and
/// `|M| + |V|·(1+2(|F|+|S|)) + Σ_d (|F|−period_d+1)·|V|`.
pub fn problem_size(problem: &AllocationProblem) -> Result<(usize, usize), AllocError> {
    let (detectors, f) = feasible_set(problem)?;
    let v = problem.streams.len();
    let d = detectors.len();
    let b = problem.bitrates_kbps.len();
    let s = problem.sites.len();
    let m = problem.machines.len();
    let n_vars = v * (d * (b + f) + s);
    let windows: usize = detectors
        .iter()
        .map(|&k| (f - problem.period_of(k) as usize + 1) * v)
        .sum();
    let n_cons = m + v * (1 + 2 * (f + s)) + windows;
    Ok((n_vars, n_cons))
}

pub fn build_ilp(problem: &AllocationProblem) -> Result<IlpInstance, AllocError> {
    let (detectors, horizon) = feasible_set(problem)?;
    if detectors.is_empty() {
        return Err(AllocError::NoFeasibleDetectors);
    }
    let layout = Layout {
        n_streams: problem.streams.len(),
        detectors: detectors.clone(),
        n_bitrates: problem.bitrates_kbps.len(),
        horizon,
        n_sites: problem.sites.len(),
    };
    let p = &problem.params;
    let n_sites = problem.sites.len();
    let big_m = link_big_m(problem);
    let data: Vec<DetectorData> = detectors
        .iter()
        .map(|&d| {
            let det = &problem.detectors[d];
            DetectorData {
                index: d,
                period: problem.period_of(d),
                machine: det.machine,
                site: problem.site_of(d),
                ram_mb: det.ram_mb,
                accuracy: det.accuracy.clone(),
            }
        })
        .collect();

    let mut variables = Vec::with_capacity(layout.n_vars());
    for v in 0..layout.n_streams {
        for &d in &detectors {
            for b in 0..layout.n_bitrates {
                variables.push(Variable { name: format!("x_{v}_{d}_{b}"), kind: VarKind::Binary });
            }
        }
    }
    for v in 0..layout.n_streams {
        for &d in &detectors {
            for f in 0..horizon {
                variables.push(Variable { name: format!("y_{v}_{d}_{f}"), kind: VarKind::Binary });
            }
        }
    }
    for v in 0..layout.n_streams {
        for s in 0..n_sites {
            variables.push(Variable {
                name: format!("link_{v}_{s}"),
                kind: VarKind::Integer { upper: n_sites as u32 },
            });
        }
    }
    debug_assert_eq!(variables.len(), layout.n_vars());

    let mut objective = Vec::new();
    for v in 0..layout.n_streams {
        for (k, dd) in data.iter().enumerate() {
            for b in 0..layout.n_bitrates {
                let gain = problem.bitrates_kbps[b] / dd.period as f64 * dd.accuracy[b];
                objective.push((layout.x(v, k, b), p.w * gain));
            }
        }
        for s in 0..n_sites {
            objective.push((layout.link(v, s), -(1.0 - p.w)));
        }
    }

    let x_terms = |v: usize, k: usize, coef: f64| -> Vec<(usize, f64)> {
        (0..layout.n_bitrates).map(|b| (layout.x(v, k, b), coef)).collect()
    };

    let mut constraints = Vec::new();
    for (m, machine) in problem.machines.iter().enumerate() {
        let mut terms = Vec::new();
        for v in 0..layout.n_streams {
            for (k, dd) in data.iter().enumerate() {
                if dd.machine == m {
                    let coef = if p.exclusive_machines { 1.0 } else { dd.ram_mb };
                    terms.extend(x_terms(v, k, coef));
                }
            }
        }
        let (tag, rhs) = if p.exclusive_machines {
            (ConstraintTag::ExclusiveMachine, 1.0)
        } else {
            (ConstraintTag::Ram, machine.ram_mb)
        };
        constraints.push(Constraint {
            tag,
            name: format!("{}_{m}", tag.name()),
            terms,
            sense: Sense::Le,
            rhs: Rhs::Value(rhs),
        });
    }

    for v in 0..layout.n_streams {
        let all_x: Vec<_> = (0..data.len()).flat_map(|k| x_terms(v, k, 1.0)).collect();
        constraints.push(Constraint {
            tag: ConstraintTag::DetPerStream,
            name: format!("dps_{v}"),
            terms: all_x,
            sense: Sense::Le,
            rhs: Rhs::Value(p.det_per_stream as f64),
        });
        for f in 0..horizon {
            let ys: Vec<_> = (0..data.len()).map(|k| (layout.y(v, k, f), 1.0)).collect();
            constraints.push(Constraint {
                tag: ConstraintTag::DetPerFrameMin,
                name: format!("dpf_min_{v}_{f}"),
                terms: ys.clone(),
                sense: Sense::Ge,
                rhs: Rhs::Value(1.0),
            });
            constraints.push(Constraint {
                tag: ConstraintTag::DetPerFrameMax,
                name: format!("dpf_max_{v}_{f}"),
                terms: ys,
                sense: Sense::Le,
                rhs: Rhs::Value(p.det_per_frame as f64),
            });
        }
        for s in 0..n_sites {
            let mut terms = Vec::new();
            for (k, dd) in data.iter().enumerate() {
                if dd.site == s {
                    for b in 0..layout.n_bitrates {
                        terms.push((layout.x(v, k, b), problem.bitrates_kbps[b] / dd.period as f64));
                    }
                }
            }
            let rhs = match problem.bandwidth(v, s) {
                Bandwidth::Unreachable => Rhs::Value(0.0),
                Bandwidth::Kbps(c) => Rhs::Value(c),
                Bandwidth::IntraSite => Rhs::Unbounded,
            };
            constraints.push(Constraint {
                tag: ConstraintTag::Bandwidth,
                name: format!("bw_{v}_{s}"),
                terms,
                sense: Sense::Le,
                rhs,
            });
        }
        for s in 0..n_sites {
            let mut terms: Vec<_> = data
                .iter()
                .enumerate()
                .filter(|(_, dd)| dd.site == s)
                .flat_map(|(k, _)| x_terms(v, k, 1.0))
                .collect();
            terms.push((layout.link(v, s), -(big_m as f64)));
            constraints.push(Constraint {
                tag: ConstraintTag::LinkUsed,
                name: format!("link_{v}_{s}"),
                terms,
                sense: Sense::Le,
                rhs: Rhs::Value(0.0),
            });
        }
    }

    let mut supplementary = Vec::new();
    for v in 0..layout.n_streams {
        for (k, dd) in data.iter().enumerate() {
            let p_d = dd.period as usize;
            for start in 0..=(horizon - p_d) {
                let mut terms: Vec<_> = (start..start + p_d).map(|f| (layout.y(v, k, f), 1.0)).collect();
                terms.extend(x_terms(v, k, -1.0));
                constraints.push(Constraint {
                    tag: ConstraintTag::FrameTiming,
                    name: format!("timing_{v}_{}_{start}", dd.index),
                    terms,
                    sense: Sense::Eq,
                    rhs: Rhs::Value(0.0),
                });
            }
            if layout.n_bitrates > 1 {
                supplementary.push(Constraint {
                    tag: ConstraintTag::OneBitrate,
                    name: format!("one_bitrate_{v}_{}", dd.index),
                    terms: x_terms(v, k, 1.0),
                    sense: Sense::Le,
                    rhs: Rhs::Value(1.0),
                });
            }
        }
    }

    let model = Model {
        detectors: data,
        bitrates_kbps: problem.bitrates_kbps.clone(),
        links: problem.links.clone(),
        machine_ram_mb: problem.machines.iter().map(|m| m.ram_mb).collect(),
        det_per_stream: p.det_per_stream,
        det_per_frame: p.det_per_frame,
        w: p.w,
        exclusive_machines: p.exclusive_machines,
        link_big_m: big_m,
    };
    Ok(IlpInstance { variables, objective, constraints, supplementary, layout, model })
}

fn fmt_coef(c: f64) -> String {
    format!("{c}")
}

fn write_expr(out: &mut String, terms: &[(usize, f64)], vars: &[Variable]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (n, &(i, c)) in terms.iter().enumerate() {
        let sign = if c < 0.0 { "-" } else { "+" };
        if n == 0 && c >= 0.0 {
            let _ = write!(out, " {} {}", fmt_coef(c), vars[i].name);
        } else {
            let _ = write!(out, " {sign} {} {}", fmt_coef(c.abs()), vars[i].name);
        }
    }
}

/// CPLEX LP text for an external solver. Rows whose right-hand side is
/// unbounded are omitted.
pub fn to_lp(instance: &IlpInstance) -> String {
    let vars = &instance.variables;
    let mut out = String::from("\\ detector allocation\nMaximize\n obj:");
    write_expr(&mut out, &instance.objective, vars);
    out.push_str("\nSubject To\n");
    for c in instance.constraints.iter().chain(&instance.supplementary) {
        let Rhs::Value(rhs) = c.rhs else { continue };
        let _ = write!(out, " {}:", c.name);
        // LP format wants variables on the left; an empty row becomes 0 x <= rhs
        if c.terms.is_empty() {
            let _ = write!(out, " 0 {}", vars[0].name);
        } else {
            write_expr(&mut out, &c.terms, vars);
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", fmt_coef(rhs));
    }
    out.push_str("Bounds\n");
    for v in vars {
        if let VarKind::Integer { upper } = v.kind {
            let _ = writeln!(out, " 0 <= {} <= {upper}", v.name);
        }
    }
    out.push_str("Binary\n");
    for v in vars.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("General\n");
    for v in vars.iter().filter(|v| v.kind != VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

/// Reads `name value` pairs (one per line) as written by common solvers.
/// Unknown names, comments and malformed lines are skipped; missing
/// variables are 0.
pub fn parse_solution(instance: &IlpInstance, text: &str) -> Vec<f64> {
    let index: HashMap<&str, usize> =
        instance.variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let mut values = vec![0.0; instance.variables.len()];
    for line in text.lines() {
        let mut it = line.split_whitespace();
        let (Some(name), Some(val)) = (it.next(), it.next()) else { continue };
        if let (Some(&i), Ok(x)) = (index.get(name), val.parse::<f64>()) {
            values[i] = x;
        }
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::problem::*;

    pub(crate) fn sizing_problem(n_streams: usize) -> AllocationProblem {
        let sites: Vec<Site> = (0..4).map(|s| Site { id: format!("s{s}") }).collect();
        let machines: Vec<Machine> = (0..40)
            .map(|m| Machine { id: format!("m{m}"), site: m % 4, ram_mb: 8000.0, kind: MachineKind::Gpu })
            .collect();
        let detectors = (0..40)
            .map(|d| DetectorProfile {
                id: format!("d{d}"),
                machine: d,
                time_s: 0.02,
                ram_mb: 1000.0,
                accuracy: vec![0.5; 9],
            })
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

    #[test]
    fn sizes_match_closed_form_and_build() {
        for (v, nv, nc) in [(1, 404, 91), (2, 808, 142), (5, 2020, 295)] {
            let p = sizing_problem(v);
            assert_eq!(problem_size(&p).unwrap(), (nv, nc));
            let inst = build_ilp(&p).unwrap();
            assert_eq!((inst.n_vars(), inst.n_constraints()), (nv, nc));
        }
    }

    #[test]
    fn minimal_instance_has_three_variables() {
        let p = AllocationProblem {
            streams: vec!["v".into()],
            sites: vec![Site { id: "s".into() }],
            machines: vec![Machine { id: "m".into(), site: 0, ram_mb: 1.0, kind: MachineKind::Cpu }],
            detectors: vec![DetectorProfile {
                id: "d".into(),
                machine: 0,
                time_s: 0.01,
                ram_mb: 1.0,
                accuracy: vec![0.5],
            }],
            bitrates_kbps: vec![100.0],
            links: vec![vec![Bandwidth::IntraSite]],
            params: AllocationParams::default(),
        };
        assert_eq!(build_ilp(&p).unwrap().n_vars(), 3);
        // 1 ram + (1 + 2·(1 + 1)) + 1 window
        assert_eq!(problem_size(&p).unwrap(), (3, 7));
    }

    #[test]
    fn lp_text_round_trip() {
        let inst = build_ilp(&sizing_problem(1)).unwrap();
        let lp = to_lp(&inst);
        assert!(lp.starts_with("\\ detector allocation\nMaximize\n obj: "));
        assert!(lp.contains("\nSubject To\n ram_0: 1000 x_0_0_0"));
        assert!(lp.contains(" 0 <= link_0_3 <= 4\n"));
        assert!(lp.trim_end().ends_with("End"));
        let vals = parse_solution(&inst, "# comment\nx_0_3_8 1\ny_0_3_0 1\nlink_0_3 1\nbogus 7\n");
        assert_eq!(vals[inst.layout.x(0, 3, 8)], 1.0);
        assert_eq!(vals.iter().sum::<f64>(), 3.0);
        assert!(inst.violations(&vals).is_empty());
    }
}
