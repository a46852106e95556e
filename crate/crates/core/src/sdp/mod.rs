//! Relaxed CRB-minimizing beamforming: problem construction, conic solve,
//! and rank-one beamformer recovery.

mod build;
mod problem;
mod recover;
mod solver;

pub use build::{
    build_problem, build_problem_dsm, build_problem_psm, build_problem_ucm, DesignInputs,
};
pub use problem::{ConicProblem, Coord, LinearConstraint, Lmi, MatrixVar, Sense, VarKind};
pub use recover::{
    design, model_objective, recover_beamformers, verify_solution, BeamformerSolution,
    DesignOutcome, VerificationReport,
};
pub use solver::{solve, RelaxedSolution, SolverOptions, SolverStatus};
