//! Assignment of characterized detectors to video streams.
//!
//! The problem is an integer program over three variable families: `x`
//! selects a (stream, detector, bitrate) triple, `y` marks the frames of a
//! cyclic schedule a detector starts on, and `linkUsed` counts links per
//! (stream, site). The schedule repeats after the least common multiple of
//! the usable detectors' periods.

mod assignment;
mod ilp;
pub mod io;
mod problem;
mod schedule;
mod solver;
mod verify;

use std::time::Duration;

use thiserror::Error;

pub use assignment::{combine_objective, link_count, Assignment, Choice};
pub use ilp::{
    build_ilp, link_big_m, parse_solution, problem_size, to_lp, Constraint, ConstraintTag, DetectorData,
    IlpInstance, Layout, Model, Rhs, Sense, VarKind, Variable,
};
pub use problem::{
    get_detectors, period_from_time, AllocationParams, AllocationProblem, Bandwidth,
    DetectorProfile, Machine, MachineKind, Site,
};
pub use schedule::{find_offsets, get_lcm, start_frames, MAX_HORIZON};
pub use solver::{solve_ilp, BranchAndBound, IlpSolver, SolveOutcome};
pub use verify::verify_assignment;

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("problem has no bitrate levels")]
    NoBitrates,
    #[error("schedule horizon {lcm} exceeds the limit of {max} frames")]
    HorizonTooLarge { lcm: u64, max: u64 },
    #[error("no detector meets the timing and reachability requirements")]
    NoFeasibleDetectors,
    #[error("{0}")]
    Format(String),
}

/// Filters usable detectors, builds the program over their common cycle
/// and solves it with the built-in solver. With no usable detector the
/// result is an empty assignment.
pub fn assign_detectors(problem: &AllocationProblem, time_budget: Option<Duration>) -> Result<SolveOutcome, AllocError> {
    assign_with(problem, &BranchAndBound, time_budget)
}

pub fn assign_with(
    problem: &AllocationProblem,
    solver: &dyn IlpSolver,
    time_budget: Option<Duration>,
) -> Result<SolveOutcome, AllocError> {
    problem.validate()?;
    if get_detectors(problem).is_empty() {
        return Ok(SolveOutcome::Optimal(Assignment::empty(problem.streams.len(), problem.sites.len())));
    }
    let instance = build_ilp(problem)?;
    Ok(solver.solve(&instance, time_budget))
}
