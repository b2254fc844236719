//! Python module `skit`: box metrics, detector allocation and scenario
//! replay on top of `skit-core`.

use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use skit_core::allocation::{self as alloc, io as alloc_io};
use skit_core::metrics::{self, io as metrics_io, BoundingBox, ReportConfig};
use skit_core::sim;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bbox(b: (f64, f64, f64, f64)) -> PyResult<BoundingBox> {
    BoundingBox::new(b.0, b.1, b.2, b.3).map_err(value_err)
}

/// IoU of two `(x_min, y_min, x_max, y_max)` boxes.
#[pyfunction]
fn iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> PyResult<f64> {
    metrics::iou(&bbox(a)?, &bbox(b)?).map_err(value_err)
}

/// Metric table for box files given as text (one
/// `image_id,class_id,x_min,y_min,x_max,y_max[,score]` record per line).
/// Rows are `(metric, iou, area, max_det, value)`; undefined values are -1.
#[pyfunction]
#[pyo3(signature = (gt, det, class_id=None, score_cutoff=0.0, max_dets=vec![1, 10, 100]))]
fn evaluate(
    gt: &str,
    det: &str,
    class_id: Option<u32>,
    score_cutoff: f64,
    max_dets: Vec<usize>,
) -> PyResult<Vec<(String, String, String, Option<usize>, f64)>> {
    let gts = metrics_io::parse_boxes(gt).map_err(value_err)?;
    let dts = metrics_io::parse_boxes(det).map_err(value_err)?;
    let images = metrics_io::assemble(&gts, &dts, class_id);
    let rows = metrics::evaluate_report(&images, &ReportConfig { max_dets, score_cutoff }).map_err(value_err)?;
    Ok(rows.into_iter().map(|r| (r.metric, r.iou, r.area, r.max_det, r.value)).collect())
}

/// Posterior log-odds after one update with probability `p`, clamped to
/// `[-clamp, clamp]`.
#[pyfunction]
#[pyo3(signature = (l_old, p, clamp=3.5))]
fn log_odds_update(l_old: f64, p: f64, clamp: f64) -> PyResult<f64> {
    skit_core::fusion::log_odds_update(l_old, p, (-clamp, clamp)).map_err(value_err)
}

#[pyclass(module = "skit")]
struct AllocationProblem {
    inner: alloc::AllocationProblem,
}

#[pymethods]
impl AllocationProblem {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(AllocationProblem { inner: alloc_io::parse_problem(text).map_err(value_err)? })
    }

    fn to_toml(&self) -> String {
        alloc_io::problem_to_toml(&self.inner)
    }

    #[getter]
    fn w(&self) -> f64 {
        self.inner.params.w
    }

    #[setter]
    fn set_w(&mut self, w: f64) {
        self.inner.params.w = w;
    }

    #[getter]
    fn exclusive_machines(&self) -> bool {
        self.inner.params.exclusive_machines
    }

    #[setter]
    fn set_exclusive_machines(&mut self, on: bool) {
        self.inner.params.exclusive_machines = on;
    }

    #[getter]
    fn detector_ids(&self) -> Vec<String> {
        self.inner.detectors.iter().map(|d| d.id.clone()).collect()
    }

    /// `(variables, constraints)` of the integer program.
    fn size(&self) -> PyResult<(usize, usize)> {
        alloc::problem_size(&self.inner).map_err(value_err)
    }

    /// Optimal (or, with a time budget, best found) assignment; `None` when
    /// no feasible assignment exists or none was found in time.
    #[pyo3(signature = (time_budget=None))]
    fn solve(&self, time_budget: Option<f64>) -> PyResult<Option<Assignment>> {
        let budget = time_budget.map(Duration::from_secs_f64);
        let outcome = alloc::assign_detectors(&self.inner, budget).map_err(value_err)?;
        let optimal = outcome.is_optimal();
        Ok(outcome.assignment().map(|a| Assignment { inner: a.clone(), optimal }))
    }

    /// Names of the violated constraint families; empty when feasible.
    fn verify(&self, assignment: &Assignment) -> Vec<&'static str> {
        alloc::verify_assignment(&self.inner, &assignment.inner).into_iter().map(|t| t.name()).collect()
    }

    fn parse_assignment(&self, text: &str) -> PyResult<Assignment> {
        let (inner, optimal) = alloc_io::parse_assignment(&self.inner, text).map_err(value_err)?;
        Ok(Assignment { inner, optimal })
    }

    fn assignment_to_toml(&self, assignment: &Assignment) -> String {
        alloc_io::assignment_to_toml(&self.inner, &assignment.inner, assignment.optimal)
    }

    fn schedule_csv(&self, assignment: &Assignment) -> String {
        alloc_io::schedule_csv(&self.inner, &assignment.inner)
    }
}

#[pyclass(module = "skit")]
struct Assignment {
    inner: alloc::Assignment,
    optimal: bool,
}

#[pymethods]
impl Assignment {
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn optimal(&self) -> bool {
        self.optimal
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    /// `(stream, detector, bitrate_level)` index triples.
    #[getter]
    fn chosen(&self) -> Vec<(usize, usize, usize)> {
        self.inner.chosen.iter().map(|c| (c.stream, c.detector, c.bitrate)).collect()
    }

    /// `schedule[stream][frame]`: detector indices starting on that frame.
    #[getter]
    fn schedule(&self) -> Vec<Vec<Vec<usize>>> {
        self.inner.schedule.clone()
    }
}

#[pyclass(module = "skit")]
struct Scenario {
    inner: sim::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Scenario { inner: sim::Scenario::from_toml(text).map_err(value_err)? })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    /// Sets one fusion setting, e.g. `set("resolution", "0.25")`.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.fusion.set(key, value).map_err(value_err)
    }

    /// Copy whose detectors are the ones `assignment` chose for `stream`.
    #[pyo3(signature = (problem, assignment, stream=0))]
    fn with_assignment(&self, problem: &AllocationProblem, assignment: &Assignment, stream: usize) -> PyResult<Self> {
        let inner = sim::apply_assignment(&self.inner, &problem.inner, &assignment.inner, stream).map_err(value_err)?;
        Ok(Scenario { inner })
    }

    fn replay(&self) -> PyResult<Report> {
        let inner = sim::run_experiment(&self.inner, &self.inner.fusion).map_err(value_err)?;
        Ok(Report { inner })
    }
}

#[pyclass(module = "skit")]
struct Report {
    inner: sim::Report,
}

#[pymethods]
impl Report {
    #[getter]
    fn frames(&self) -> usize {
        self.inner.frames
    }

    #[getter]
    fn detections(&self) -> usize {
        self.inner.detections
    }

    #[getter]
    fn config_hash(&self) -> String {
        self.inner.config_hash.clone()
    }

    /// `(x, y, z, probability, cell_count)` per salient location.
    #[getter]
    fn salient(&self) -> Vec<(f64, f64, f64, f64, usize)> {
        self.inner
            .salient
            .iter()
            .map(|l| (l.position.x, l.position.y, l.position.z, l.probability, l.cell_count))
            .collect()
    }

    /// `(salient, object, error_m)` per matched location.
    #[getter]
    fn matches(&self) -> Vec<(usize, usize, f64)> {
        self.inner.matches.iter().map(|m| (m.salient, m.object, m.error)).collect()
    }

    #[getter]
    fn missed(&self) -> Vec<usize> {
        self.inner.missed.clone()
    }

    #[getter]
    fn false_locations(&self) -> Vec<usize> {
        self.inner.false_locations.clone()
    }

    #[getter]
    fn mean_error(&self) -> Option<f64> {
        self.inner.mean_error
    }

    #[getter]
    fn mean_probability(&self) -> Option<f64> {
        self.inner.mean_probability
    }

    #[getter]
    fn trail_cell_frames(&self) -> usize {
        self.inner.trail_cell_frames
    }

    /// Writes the report files into `dir`.
    fn write(&self, dir: &str) -> PyResult<()> {
        sim::write_report(&self.inner, std::path::Path::new(dir)).map_err(value_err)
    }
}

#[pymodule]
fn skit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(log_odds_update, m)?)?;
    m.add_class::<AllocationProblem>()?;
    m.add_class::<Assignment>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<Report>()?;
    m.add("UNDEFINED", metrics::UNDEFINED)?;
    Ok(())
}
