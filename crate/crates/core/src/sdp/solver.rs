//! Clarabel backend for [`ConicProblem`].
//!
//! Linear constraints map to the nonnegative cone and every LMI to a
//! `PSDTriangleConeT` over its upper triangle, column by column, with
//! off-diagonal entries scaled by `√2`.

use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus as ClarabelStatus, SupportedConeT,
};
use num_complex::Complex64;

use super::problem::{ConicProblem, Sense};
use crate::linalg::CMat;
use crate::target::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStatus {
    Optimal,
    Inaccurate,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::Inaccurate => "inaccurate",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::Unbounded => "unbounded",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }

    /// Whether the iterate is usable for recovery.
    pub fn has_solution(&self) -> bool {
        matches!(self, SolverStatus::Optimal | SolverStatus::Inaccurate)
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol_gap_rel: f64,
    pub tol_gap_abs: f64,
    pub tol_feas: f64,
    pub max_iter: u32,
    /// Seconds; infinite means no limit.
    pub time_limit: f64,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_gap_rel: 1e-8,
            tol_gap_abs: 1e-8,
            tol_feas: 1e-8,
            max_iter: 100_000,
            time_limit: f64::INFINITY,
            verbose: false,
        }
    }
}

/// Solution of the relaxed (rank-unconstrained) problem.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub model: ModelKind,
    pub r_w_tilde: CMat,
    pub r_k_tilde: Vec<CMat>,
    /// Objective in physical units (CRB trace, or `Tr{R_w⁻¹}` for UCM).
    pub objective_value: f64,
    pub solver_status: SolverStatus,
    pub solve_time: Duration,
    pub iterations: u32,
    pub gap_rel: f64,
    pub diagnostics: String,
    /// Raw solver coordinates.
    pub x: Vec<f64>,
}

fn svec_index(row: usize, col: usize) -> usize {
    col * (col + 1) / 2 + row
}

/// Assembles `(A, b, cones)` with `A x + s = b`, `s ∈ K`.
fn assemble(problem: &ConicProblem) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
    let sqrt2 = std::f64::consts::SQRT_2;
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut cones = Vec::new();

    if !problem.linear.is_empty() {
        for (i, c) in problem.linear.iter().enumerate() {
            // Ge: s = a·x − rhs,  Le: s = rhs − a·x
            let sign = match c.sense {
                Sense::Ge => -1.0,
                Sense::Le => 1.0,
            };
            for &(k, a) in &c.coeffs {
                rows.push(i);
                cols.push(k);
                vals.push(sign * a);
            }
            b.push(sign * c.rhs);
        }
        cones.push(SupportedConeT::NonnegativeConeT(problem.linear.len()));
    }

    let mut row0 = b.len();
    for lmi in &problem.lmis {
        let dim = lmi.size * (lmi.size + 1) / 2;
        let mut rhs = vec![0.0; dim];
        let weight = |r: usize, c: usize| if r == c { 1.0 } else { sqrt2 };
        for &(r, c, v) in &lmi.constant {
            let (r, c) = (r.min(c), r.max(c));
            rhs[svec_index(r, c)] += weight(r, c) * v;
        }
        for &(k, r, c, v) in &lmi.terms {
            let (r, c) = (r.min(c), r.max(c));
            rows.push(row0 + svec_index(r, c));
            cols.push(k);
            vals.push(-weight(r, c) * v);
        }
        b.extend(rhs);
        cones.push(SupportedConeT::PSDTriangleConeT(lmi.size));
        row0 += dim;
    }

    let a = CscMatrix::new_from_triplets(b.len(), problem.n_coords, rows, cols, vals);
    (a, b, cones)
}

/// Certification of a solve that stalled just short of the requested
/// tolerances (`AlmostSolved`): it counts as optimal when the relative gap,
/// primal residual and dual residual are below these.
pub const CERTIFY_GAP_REL: f64 = 1e-7;
pub const CERTIFY_RES_PRIMAL: f64 = 1e-7;
pub const CERTIFY_RES_DUAL: f64 = 1e-6;

/// Solver variations tried in order until one succeeds.
#[derive(Debug, Clone, Copy)]
struct Variant {
    equilibrate_iters: u32,
    step: f64,
    chordal: bool,
}

const ATTEMPTS: [Variant; 4] = [
    Variant {
        equilibrate_iters: 30,
        step: 0.99,
        chordal: false,
    },
    Variant {
        equilibrate_iters: 10,
        step: 0.99,
        chordal: false,
    },
    Variant {
        equilibrate_iters: 30,
        step: 0.95,
        chordal: false,
    },
    Variant {
        equilibrate_iters: 0,
        step: 0.99,
        chordal: true,
    },
];

struct Attempt {
    status: SolverStatus,
    x: Vec<f64>,
    iterations: u32,
    gap_rel: f64,
    diagnostics: String,
}

fn run_once(
    problem: &ConicProblem,
    data: &(CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>),
    opts: &SolverOptions,
    variant: Variant,
    remaining: f64,
) -> Attempt {
    let (a, b, cones) = data;
    let n = problem.n_coords;
    let mut q = vec![0.0; n];
    for &(k, c) in &problem.objective {
        q[k] += c;
    }
    let p = CscMatrix::zeros((n, n));
    let settings = DefaultSettings {
        tol_gap_rel: opts.tol_gap_rel,
        tol_gap_abs: opts.tol_gap_abs,
        tol_feas: opts.tol_feas,
        max_iter: opts.max_iter,
        time_limit: remaining,
        verbose: opts.verbose,
        max_step_fraction: variant.step,
        chordal_decomposition_enable: variant.chordal,
        equilibrate_enable: variant.equilibrate_iters > 0,
        equilibrate_max_iter: variant.equilibrate_iters,
        ..DefaultSettings::default()
    };
    let mut solver = match DefaultSolver::new(&p, &q, a, b, cones, settings) {
        Ok(s) => s,
        Err(e) => {
            return Attempt {
                status: SolverStatus::NumericalFailure,
                x: Vec::new(),
                iterations: 0,
                gap_rel: f64::NAN,
                diagnostics: format!("solver setup failed: {e:?}"),
            }
        }
    };
    solver.solve();
    let info = &solver.info;
    let certified = info.gap_rel <= CERTIFY_GAP_REL
        && info.res_primal <= CERTIFY_RES_PRIMAL
        && info.res_dual <= CERTIFY_RES_DUAL;
    let status = match solver.solution.status {
        ClarabelStatus::Solved => SolverStatus::Optimal,
        ClarabelStatus::AlmostSolved if certified => SolverStatus::Optimal,
        ClarabelStatus::AlmostSolved => SolverStatus::Inaccurate,
        ClarabelStatus::PrimalInfeasible | ClarabelStatus::AlmostPrimalInfeasible => {
            SolverStatus::Infeasible
        }
        ClarabelStatus::DualInfeasible | ClarabelStatus::AlmostDualInfeasible => {
            SolverStatus::Unbounded
        }
        _ => SolverStatus::NumericalFailure,
    };
    Attempt {
        status,
        x: solver.solution.x.clone(),
        iterations: info.iterations,
        gap_rel: info.gap_rel,
        diagnostics: format!(
            "clarabel {:?}: iter {}, gap_rel {:.2e}, res_primal {:.2e}, res_dual {:.2e} ({variant:?})",
            solver.solution.status, info.iterations, info.gap_rel, info.res_primal, info.res_dual
        ),
    }
}

/// Solves the relaxed problem. Failures are reported through the status.
///
/// A numerical failure or an uncertified stall is retried with different
/// equilibration and step settings; the best attempt is kept.
pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> RelaxedSolution {
    let start = Instant::now();
    if let Some(reason) = &problem.infeasible {
        return RelaxedSolution {
            model: problem.model,
            r_w_tilde: CMat::zeros(0, 0),
            r_k_tilde: Vec::new(),
            objective_value: f64::NAN,
            solver_status: SolverStatus::Infeasible,
            solve_time: start.elapsed(),
            iterations: 0,
            gap_rel: f64::NAN,
            diagnostics: reason.clone(),
            x: Vec::new(),
        };
    }
    let data = assemble(problem);
    let mut best: Option<Attempt> = None;
    let mut log = Vec::new();
    for variant in ATTEMPTS {
        let remaining = (opts.time_limit - start.elapsed().as_secs_f64()).max(0.0);
        let attempt = run_once(problem, &data, opts, variant, remaining);
        log.push(attempt.diagnostics.clone());
        let done = !matches!(
            attempt.status,
            SolverStatus::NumericalFailure | SolverStatus::Inaccurate
        );
        let better = match &best {
            None => true,
            Some(b) => {
                b.status == SolverStatus::NumericalFailure
                    && attempt.status != SolverStatus::NumericalFailure
            }
        };
        if better || done {
            best = Some(attempt);
        }
        if done || start.elapsed().as_secs_f64() >= opts.time_limit {
            break;
        }
    }
    let best = best.expect("at least one attempt");
    let diagnostics = log.join("; ");

    let (r_w_tilde, r_k_tilde, objective_value) = if best.x.len() == problem.n_coords {
        let scale = Complex64::new(problem.covariance_scale, 0.0);
        (
            problem.vars[problem.r_w].hermitian_value(&best.x) * scale,
            problem
                .r_k
                .iter()
                .map(|&i| problem.vars[i].hermitian_value(&best.x) * scale)
                .collect(),
            problem.objective_value(&best.x),
        )
    } else {
        (CMat::zeros(0, 0), Vec::new(), f64::NAN)
    };
    RelaxedSolution {
        model: problem.model,
        r_w_tilde,
        r_k_tilde,
        objective_value,
        solver_status: best.status,
        solve_time: start.elapsed(),
        iterations: best.iterations,
        gap_rel: best.gap_rel,
        diagnostics,
        x: best.x,
    }
}
