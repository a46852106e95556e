//! Rank-one recovery of the communication beams from the relaxed solution,
//! extraction of the sensing beamformer, and feasibility reporting.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::build::{build_problem, DesignInputs};
use super::solver::{solve, RelaxedSolution, SolverOptions, SolverStatus};
use crate::array::ArrayConfig;
use crate::channel::sinr;
use crate::error::{Error, Result};
use crate::fisher::{
    assemble_fim_dsm, assemble_fim_psm, crb_report, crb_target_coordinates, CrbReport,
    MAX_CONDITION,
};
use crate::linalg::{condition_number_sym, hermitian_part, real_embedding, trace_re, CMat};
use crate::target::{DsmParams, ModelKind};

/// Eigenvalues of the sensing covariance below this fraction of `Tr{R_w}`
/// are dropped when factoring it.
const SENSING_EIG_KEEP: f64 = 1e-9;
/// Negative eigenvalues of the sensing covariance beyond this fraction of
/// `Tr{R_w}` are an error.
const SENSING_EIG_NEG: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct BeamformerSolution {
    pub model: ModelKind,
    /// `N_t × K`, column `k` serves user `k`.
    pub w_c: CMat,
    /// `N_t × r` sensing beams, `r` the numerical rank of the sensing covariance.
    pub w_r: CMat,
    pub r_w_star: CMat,
    pub r_k_star: Vec<CMat>,
    /// `(θ₀, Δ)` CRB of `r_w_star` through the design model's FIM.
    pub crb_achieved: Option<CrbReport>,
    /// Design objective re-evaluated at `r_w_star` in the model's own units.
    pub model_objective: Option<f64>,
    /// `‖W_r W_rᴴ − (R_w − Σ R_k)‖_F`
    pub radar_residual: f64,
}

impl BeamformerSolution {
    /// `W = [W_c, W_r]`.
    pub fn full_beamformer(&self) -> CMat {
        let nt = self.w_c.nrows().max(self.w_r.nrows());
        let (k, r) = (self.w_c.ncols(), self.w_r.ncols());
        let mut w = CMat::zeros(nt, k + r);
        if k > 0 {
            w.view_mut((0, 0), (nt, k)).copy_from(&self.w_c);
        }
        if r > 0 {
            w.view_mut((0, k), (nt, r)).copy_from(&self.w_r);
        }
        w
    }
}

/// Value of the design objective at `r_w`: CRB trace of the angle block for
/// the structured models, `Tr{R_w⁻¹}` for the unstructured one.
pub fn model_objective(
    model: ModelKind,
    r_w: &CMat,
    inputs: &DesignInputs,
    arrays: &ArrayConfig,
) -> Result<f64> {
    let xi = &inputs.target_prior;
    match model {
        ModelKind::Psm => {
            Ok(crb_report(&assemble_fim_psm(xi, r_w, &inputs.noise, arrays)?, 2, false)?.crb_trace)
        }
        ModelKind::Dsm => {
            let dsm = DsmParams::from_psm(xi)?;
            let f = assemble_fim_dsm(&dsm, r_w, &inputs.noise, arrays)?;
            Ok(crb_report(&f, dsm.n_scatterers(), false)?.crb_trace)
        }
        ModelKind::Ucm => {
            let condition = condition_number_sym(&real_embedding(r_w));
            if !(condition < MAX_CONDITION) {
                return Err(Error::IllConditioned {
                    what: "R_w",
                    condition,
                });
            }
            let inv = r_w.clone().try_inverse().ok_or(Error::IllConditioned {
                what: "R_w",
                condition,
            })?;
            Ok(trace_re(&inv))
        }
    }
}

/// `w_k = R̃_k h_k* / √(h_kᵀ R̃_k h_k*)`, `R_k = w_k w_kᴴ`, `R_w = R̃_w`, and
/// `W_r` from the eigendecomposition of `R_w − Σ R_k`.
pub fn recover_beamformers(
    sol: &RelaxedSolution,
    inputs: &DesignInputs,
    arrays: &ArrayConfig,
) -> Result<BeamformerSolution> {
    if !sol.solver_status.has_solution() {
        return Err(Error::Solver(format!(
            "no solution to recover (status {})",
            sol.solver_status
        )));
    }
    let nt = inputs.n_tx();
    let r_w_star = hermitian_part(&sol.r_w_tilde);
    let total = trace_re(&r_w_star);

    let mut w_c = CMat::zeros(nt, inputs.n_users());
    let mut r_k_star = Vec::with_capacity(inputs.n_users());
    for (k, r_k) in sol.r_k_tilde.iter().enumerate() {
        let h_conj = inputs.channel(k).map(|z| z.conj());
        let projected = r_k * &h_conj;
        let gain = (inputs.channel(k).transpose() * &projected)[0].re;
        let floor = 1e-14 * trace_re(r_k).abs().max(f64::MIN_POSITIVE) * h_conj.norm_squared();
        if !(gain > floor) {
            return Err(Error::DegenerateUser { user: k, gain });
        }
        let w = projected / Complex64::new(gain.sqrt(), 0.0);
        r_k_star.push(&w * w.adjoint());
        w_c.set_column(k, &w);
    }

    let mut sensing = r_w_star.clone();
    for r in &r_k_star {
        sensing -= r;
    }
    let sensing = hermitian_part(&sensing);
    let eig = SymmetricEigen::new(sensing.clone());
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if min < -SENSING_EIG_NEG * total {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let keep: Vec<usize> = (0..nt)
        .filter(|&i| eig.eigenvalues[i] > SENSING_EIG_KEEP * total)
        .collect();
    let mut w_r = CMat::zeros(nt, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let v = eig.eigenvectors.column(i) * Complex64::new(eig.eigenvalues[i].sqrt(), 0.0);
        w_r.set_column(col, &v);
    }
    let radar_residual = (&w_r * w_r.adjoint() - &sensing).norm();

    let crb_achieved = crb_target_coordinates(
        sol.model,
        &inputs.target_prior,
        &r_w_star,
        &inputs.noise,
        arrays,
    )
    .ok();
    let model_objective = model_objective(sol.model, &r_w_star, inputs, arrays).ok();
    Ok(BeamformerSolution {
        model: sol.model,
        w_c,
        w_r,
        r_w_star,
        r_k_star,
        crb_achieved,
        model_objective,
        radar_residual,
    })
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub sinr: Vec<f64>,
    /// `None` without users.
    pub sinr_min_db: Option<f64>,
    pub sinr_ok: bool,
    /// `‖W‖_F²`
    pub total_power: f64,
    pub power_ok: bool,
    pub radar_residual: f64,
    pub radar_residual_ok: bool,
    /// `(θ₀, Δ)` CRB of `W Wᴴ` evaluated through each model's FIM and
    /// Jacobian; `Err` carries the reason an evaluation is undefined.
    pub crb_psm: std::result::Result<CrbReport, String>,
    pub crb_via_dsm: std::result::Result<CrbReport, String>,
    pub crb_via_ucm: std::result::Result<CrbReport, String>,
}

impl VerificationReport {
    pub fn feasible(&self) -> bool {
        self.sinr_ok && self.power_ok && self.radar_residual_ok
    }
}

pub fn verify_solution(
    bf: &BeamformerSolution,
    inputs: &DesignInputs,
    arrays: &ArrayConfig,
) -> VerificationReport {
    let w = bf.full_beamformer();
    let k = inputs.n_users();
    let sinr: Vec<f64> = (0..k)
        .map(|u| sinr(&w, u, &inputs.channel(u), inputs.sigma2_k[u]))
        .collect();
    let sinr_ok = sinr
        .iter()
        .zip(&inputs.gamma)
        .all(|(s, g)| *s >= g * (1.0 - 1e-6));
    let sinr_min_db = sinr
        .iter()
        .copied()
        .reduce(f64::min)
        .map(|s| 10.0 * s.log10());
    let total_power = w.norm_squared();
    let power_ok = total_power <= inputs.power * (1.0 + 1e-6);
    let r_w = &w * w.adjoint();
    let residual_ok =
        bf.radar_residual <= 1e-8 * trace_re(&bf.r_w_star).max(0.0) || bf.radar_residual == 0.0;
    let eval = |model| {
        crb_target_coordinates(model, &inputs.target_prior, &r_w, &inputs.noise, arrays)
            .map_err(|e| e.to_string())
    };
    VerificationReport {
        sinr,
        sinr_min_db,
        sinr_ok,
        total_power,
        power_ok,
        radar_residual: bf.radar_residual,
        radar_residual_ok: residual_ok,
        crb_psm: eval(ModelKind::Psm),
        crb_via_dsm: eval(ModelKind::Dsm),
        crb_via_ucm: eval(ModelKind::Ucm),
    }
}

/// Result of one full design: build, solve, recover, verify.
#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub model: ModelKind,
    pub status: SolverStatus,
    pub relaxed: RelaxedSolution,
    pub beamformer: Option<BeamformerSolution>,
    pub verification: Option<VerificationReport>,
    /// Why recovery failed after a usable solve.
    pub error: Option<String>,
}

pub fn design(
    model: ModelKind,
    inputs: &DesignInputs,
    arrays: &ArrayConfig,
    opts: &SolverOptions,
) -> Result<DesignOutcome> {
    let problem = build_problem(model, inputs, arrays)?;
    let relaxed = solve(&problem, opts);
    let mut status = relaxed.solver_status;
    let (mut beamformer, mut verification, mut error) = (None, None, None);
    if status.has_solution() {
        match recover_beamformers(&relaxed, inputs, arrays) {
            Ok(bf) => {
                verification = Some(verify_solution(&bf, inputs, arrays));
                beamformer = Some(bf);
            }
            Err(e) => {
                status = SolverStatus::NumericalFailure;
                error = Some(e.to_string());
            }
        }
    } else {
        error = Some(relaxed.diagnostics.clone());
    }
    Ok(DesignOutcome {
        model,
        status,
        relaxed,
        beamformer,
        verification,
        error,
    })
}
