//! Construction of the relaxed CRB-minimization SDPs.
//!
//! All three designs share the communication side:
//!
//! ```text
//! (1 + 1/Γ_k) h_kᵀ R_k h_k* − h_kᵀ R_w h_k* ≥ σ_k²    ∀k
//! Tr{R_w} ≤ P,   R_w ⪰ 0,   R_k ⪰ 0,   R_w − Σ_k R_k ⪰ 0
//! ```
//!
//! with the rank-one requirement on `R_k` dropped. The structured designs
//! (PSM, DSM) minimize `Tr{J⁻¹}` through the epigraph `[[U, I], [I, J]] ⪰ 0`
//! and `[[F₁ − J, F₂], [F₂ᵀ, F₄]] ⪰ 0`, which is affine in `R_w`. The
//! unstructured design minimizes `Tr{R_w⁻¹}` through `[[U, I], [I, R_w]] ⪰ 0`.

use num_complex::Complex64;

use super::problem::{
    ConicProblem, Coord, LinearConstraint, Lmi, MatrixVar, ProblemBuilder, Sense, VarKind,
};
use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use nalgebra::SymmetricEigen;

use crate::fisher::{FimModel, NoiseAndDwell, MAX_CONDITION};
use crate::linalg::{symmetrize, CMat, CVec, RMat, J};
use crate::target::{DsmParams, ModelKind, TargetParams};

/// Everything the designs need besides the array geometry.
#[derive(Debug, Clone)]
pub struct DesignInputs {
    /// `K × N_t`, row `k` is `h_kᵀ`.
    pub channels: CMat,
    /// Linear SINR targets.
    pub gamma: Vec<f64>,
    /// Linear total power budget.
    pub power: f64,
    /// Linear user noise powers.
    pub sigma2_k: Vec<f64>,
    /// Target parameters at which the CRB is evaluated.
    pub target_prior: TargetParams,
    pub noise: NoiseAndDwell,
}

impl DesignInputs {
    pub fn validate(&self) -> Result<()> {
        let k = self.channels.nrows();
        if self.gamma.len() != k || self.sigma2_k.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{k} channels, {} SINR targets, {} noise powers",
                self.gamma.len(),
                self.sigma2_k.len()
            )));
        }
        if self.gamma.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter(
                "SINR targets must be positive".into(),
            ));
        }
        if self.sigma2_k.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(
                "user noise powers must be non-negative".into(),
            ));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power budget must be non-negative, got {}",
                self.power
            )));
        }
        if self.channels.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite channel coefficient".into(),
            ));
        }
        self.target_prior.validate()
    }

    pub fn n_users(&self) -> usize {
        self.channels.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.channels.ncols()
    }

    /// `h_k` as a column vector.
    pub fn channel(&self, k: usize) -> CVec {
        self.channels.row(k).transpose()
    }
}

/// Coefficient of a Hermitian coordinate in `hᵀ R h*`.
fn quadratic_coeff(h: &CVec, coord: Coord) -> f64 {
    match coord {
        Coord::Diag(a) => h[a].norm_sqr(),
        Coord::Re(r, c) => 2.0 * (h[r] * h[c].conj()).re,
        Coord::Im(r, c) => -2.0 * (h[r] * h[c].conj()).im,
    }
}

struct CommVars {
    r_w: usize,
    r_k: Vec<usize>,
    scale: f64,
}

/// Covariances are normalized by the power budget when it is positive.
fn covariance_scale(power: f64) -> f64 {
    if power > 0.0 {
        power
    } else {
        1.0
    }
}

/// Without power `R_w = 0`: the information is zero, so every CRB objective
/// is unbounded, and no user with noise reaches a positive SINR.
fn evident_infeasibility(inputs: &DesignInputs) -> Option<String> {
    (inputs.power == 0.0).then(|| "zero power budget".to_string())
}

/// Adds `R_w`, `R_k` and the shared power, SINR and PSD constraints.
fn add_communication(b: &mut ProblemBuilder, inputs: &DesignInputs) -> Result<CommVars> {
    inputs.validate()?;
    let nt = inputs.n_tx();
    let scale = covariance_scale(inputs.power);
    let r_w = b.add_var("R_w", VarKind::Hermitian, nt);
    let r_k: Vec<usize> = (0..inputs.n_users())
        .map(|k| b.add_var(format!("R_{}", k + 1), VarKind::Hermitian, nt))
        .collect();

    let rw = b.vars[r_w].clone();
    b.linear.push(LinearConstraint {
        name: "power".into(),
        coeffs: (0..nt).map(|a| (rw.index(Coord::Diag(a)), 1.0)).collect(),
        sense: Sense::Le,
        rhs: inputs.power / scale,
    });

    for (k, &rk_idx) in r_k.iter().enumerate() {
        let h = inputs.channel(k);
        let rk = b.vars[rk_idx].clone();
        // Normalized so the noise term is 1 (or the channel energy when noiseless).
        let noise = inputs.sigma2_k[k] / scale;
        let norm = if noise > 0.0 {
            noise
        } else {
            h.norm_squared().max(f64::MIN_POSITIVE)
        };
        let gain = 1.0 + 1.0 / inputs.gamma[k];
        let mut coeffs = Vec::with_capacity(2 * nt * nt);
        for coord in rk.coords() {
            let q = quadratic_coeff(&h, coord);
            if q != 0.0 {
                coeffs.push((rk.index(coord), gain * q / norm));
                coeffs.push((rw.index(coord), -q / norm));
            }
        }
        b.linear.push(LinearConstraint {
            name: format!("sinr_{}", k + 1),
            coeffs,
            sense: Sense::Ge,
            rhs: noise / norm,
        });
    }

    // With users, R_w ⪰ 0 follows from the surplus and per-user cones.
    if r_k.is_empty() {
        let mut psd = Lmi::new("R_w psd", 2 * nt);
        psd.add_hermitian_embedded(&rw, 0, nt, 1.0);
        b.lmis.push(psd);
    }
    for &rk_idx in &r_k {
        let rk = b.vars[rk_idx].clone();
        let mut psd = Lmi::new(format!("{} psd", rk.name), 2 * nt);
        psd.add_hermitian_embedded(&rk, 0, nt, 1.0);
        b.lmis.push(psd);
    }
    if !r_k.is_empty() {
        let mut surplus = Lmi::new("R_w - sum R_k psd", 2 * nt);
        surplus.add_hermitian_embedded(&rw, 0, nt, 1.0);
        for &rk_idx in &r_k {
            let rk = b.vars[rk_idx].clone();
            surplus.add_hermitian_embedded(&rk, 0, nt, -1.0);
        }
        b.lmis.push(surplus);
    }
    Ok(CommVars { r_w, r_k, scale })
}

/// Affine coefficients of `Cᵀ F(P·R̂_w) C` in the coordinates of `R̂_w`,
/// computed from the Gram matrices `D_iᴴ D_j`.
fn fim_terms(
    fim: &FimModel,
    rw: &MatrixVar,
    cov_scale: f64,
    c: &RMat,
) -> Vec<(usize, usize, usize, f64)> {
    let grams = fim.grams();
    let m = fim.n_mats();
    let params: Vec<(usize, Complex64)> = fim.param_structure().collect();
    let n = params.len();
    let scale = cov_scale * fim.prefactor();
    let mut terms = Vec::new();
    for coord in rw.coords() {
        let k = rw.index(coord);
        let trace_coeff = |i: usize, j: usize| -> Complex64 {
            let g = &grams[i * m + j];
            match coord {
                Coord::Diag(a) => g[(a, a)],
                Coord::Re(r, c) => g[(c, r)] + g[(r, c)],
                Coord::Im(r, c) => J * (g[(c, r)] - g[(r, c)]),
            }
        };
        let mut t = RMat::zeros(n, n);
        for p in 0..n {
            for q in p..n {
                let (ip, cp) = params[p];
                let (iq, cq) = params[q];
                let v = scale * (cp.conj() * cq * trace_coeff(ip, iq)).re;
                t[(p, q)] = v;
                t[(q, p)] = v;
            }
        }
        let t = c.transpose() * t * c;
        for p in 0..n {
            for q in p..n {
                if t[(p, q)] != 0.0 {
                    terms.push((k, p, q, t[(p, q)]));
                }
            }
        }
    }
    terms
}

/// `M^{-1/2}` of a symmetric positive definite matrix, `None` when its
/// condition number exceeds the FIM limit.
fn inv_sqrt(m: &RMat) -> Option<RMat> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &v| a.max(v));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if !(min > 0.0 && max / min < MAX_CONDITION) {
        return None;
    }
    let d = RMat::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    Some(symmetrize(
        &(&eig.eigenvectors * d * eig.eigenvectors.transpose()),
    ))
}

/// Congruence `C` for the FIM LMI and weights `W` with `Tr{J⁻¹} = Tr{W Ĵ⁻¹}`
/// for the scaled variable `Ĵ`.
///
/// At the isotropic covariance `(P/N_t) I` the gain coordinates are
/// decoupled from the angles and whitened, and the angle block is whitened
/// by its Schur complement `S`, so `Cᵀ F C = I` there and `W = S⁻¹`. Mixing
/// angles into the gain coordinates leaves the angle CRB unchanged. Falls
/// back to diagonal scaling when the reference FIM is too ill-conditioned.
fn preconditioner(fim: &FimModel, cov_scale: f64, n_angles: usize) -> (RMat, RMat) {
    let n = fim.n_params();
    let nt = fim.n_tx();
    let reference = CMat::identity(nt, nt) * Complex64::new(cov_scale / nt as f64, 0.0);
    let f = symmetrize(&fim.evaluate(&reference));
    let na = n_angles;
    let f1 = f.view((0, 0), (na, na)).into_owned();
    let f2 = f.view((0, na), (na, n - na)).into_owned();
    let f4 = f.view((na, na), (n - na, n - na)).into_owned();
    let structured = (|| {
        let a = inv_sqrt(&f4)?;
        let b = -(f4.clone().try_inverse()? * f2.transpose());
        let schur = &f1 + &f2 * &b;
        let da = inv_sqrt(&schur)?;
        let mut c = RMat::zeros(n, n);
        c.view_mut((0, 0), (na, na)).copy_from(&da);
        c.view_mut((na, 0), (n - na, na)).copy_from(&(&b * &da));
        c.view_mut((na, na), (n - na, n - na)).copy_from(&a);
        Some((c, &da * &da))
    })();
    structured.unwrap_or_else(|| {
        let max = f.diagonal().iter().fold(0.0_f64, |a, &v| a.max(v));
        let d: Vec<f64> = f
            .diagonal()
            .iter()
            .map(|&v| {
                if v > 1e-14 * max && v > 0.0 {
                    1.0 / v.sqrt()
                } else if max > 0.0 {
                    1.0 / max.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let c = RMat::from_diagonal(&nalgebra::DVector::from_vec(d.clone()));
        let w = RMat::from_fn(na, na, |i, j| if i == j { d[i] * d[i] } else { 0.0 });
        (c, w)
    })
}

fn build_structured(
    model: ModelKind,
    fim: FimModel,
    n_angles: usize,
    inputs: &DesignInputs,
) -> Result<ConicProblem> {
    let mut b = ProblemBuilder::new();
    let comm = add_communication(&mut b, inputs)?;
    let j_var = b.add_var("J", VarKind::Symmetric, n_angles);
    let u_var = b.add_var("U", VarKind::Symmetric, n_angles);
    let (jv, uv) = (b.vars[j_var].clone(), b.vars[u_var].clone());
    let rw = b.vars[comm.r_w].clone();

    let (c, w) = preconditioner(&fim, comm.scale, n_angles);
    let mut schur = Lmi::new("fim schur", fim.n_params());
    schur.terms = fim_terms(&fim, &rw, comm.scale, &c);
    schur.add_symmetric(&jv, 0, -1.0);
    b.lmis.push(schur);
    let fim_lmi = b.lmis.len() - 1;

    let mut epi = Lmi::new("trace-inverse epigraph", 2 * n_angles);
    epi.add_symmetric(&uv, 0, 1.0);
    epi.add_symmetric(&jv, n_angles, 1.0);
    epi.constant
        .extend((0..n_angles).map(|i| (i, n_angles + i, 1.0)));
    b.lmis.push(epi);

    // Tr{W U} with W normalized to unit mean diagonal.
    let objective_scale = w.trace() / n_angles as f64;
    let mut objective = Vec::new();
    for col in 0..n_angles {
        for row in 0..=col {
            let coord = if row == col {
                Coord::Diag(col)
            } else {
                Coord::Re(row, col)
            };
            let factor = if row == col { 1.0 } else { 2.0 };
            let v = factor * w[(row, col)] / objective_scale;
            if v != 0.0 {
                objective.push((uv.index(coord), v));
            }
        }
    }

    Ok(ConicProblem {
        model,
        vars: b.vars,
        n_coords: b.n_coords,
        objective,
        objective_scale,
        covariance_scale: comm.scale,
        lmis: b.lmis,
        linear: b.linear,
        r_w: comm.r_w,
        r_k: comm.r_k,
        n_angles,
        fim_lmi: Some(fim_lmi),
        fim_congruence: c,
        infeasible: evident_infeasibility(inputs),
    })
}

/// CRB design for the parametric model: minimizes `Tr` of the `(θ₀, Δ)` CRB.
pub fn build_problem_psm(inputs: &DesignInputs, arrays: &ArrayConfig) -> Result<ConicProblem> {
    check_arrays(inputs, arrays)?;
    let fim = FimModel::psm(&inputs.target_prior, arrays, &inputs.noise)?;
    build_structured(ModelKind::Psm, fim, 2, inputs)
}

/// CRB design for the discrete model: minimizes `Σ_t CRB(θ_t)`.
pub fn build_problem_dsm(inputs: &DesignInputs, arrays: &ArrayConfig) -> Result<ConicProblem> {
    check_arrays(inputs, arrays)?;
    let dsm = DsmParams::from_psm(&inputs.target_prior)?;
    let fim = FimModel::dsm(&dsm, arrays, &inputs.noise)?;
    let t = dsm.n_scatterers();
    build_structured(ModelKind::Dsm, fim, t, inputs)
}

/// Design for the unstructured model: minimizes `Tr{R_w⁻¹}`.
pub fn build_problem_ucm(inputs: &DesignInputs) -> Result<ConicProblem> {
    let mut b = ProblemBuilder::new();
    let comm = add_communication(&mut b, inputs)?;
    let nt = inputs.n_tx();
    let u_var = b.add_var("U", VarKind::Hermitian, nt);
    let uv = b.vars[u_var].clone();
    let rw = b.vars[comm.r_w].clone();

    let mut epi = Lmi::new("trace-inverse epigraph", 4 * nt);
    epi.add_hermitian_embedded(&uv, 0, 2 * nt, 1.0);
    epi.add_hermitian_embedded(&rw, nt, 2 * nt, 1.0);
    for i in 0..nt {
        epi.add_constant_embedded(2 * nt, i, nt + i, Complex64::new(1.0, 0.0));
    }
    b.lmis.push(epi);

    let objective = (0..nt).map(|i| (uv.index(Coord::Diag(i)), 1.0)).collect();
    Ok(ConicProblem {
        model: ModelKind::Ucm,
        vars: b.vars,
        n_coords: b.n_coords,
        objective,
        // Tr{R_w⁻¹} = Tr{R̂_w⁻¹} / P
        objective_scale: 1.0 / comm.scale,
        covariance_scale: comm.scale,
        lmis: b.lmis,
        linear: b.linear,
        r_w: comm.r_w,
        r_k: comm.r_k,
        n_angles: nt,
        fim_lmi: None,
        fim_congruence: RMat::zeros(0, 0),
        infeasible: evident_infeasibility(inputs),
    })
}

pub fn build_problem(
    model: ModelKind,
    inputs: &DesignInputs,
    arrays: &ArrayConfig,
) -> Result<ConicProblem> {
    match model {
        ModelKind::Psm => build_problem_psm(inputs, arrays),
        ModelKind::Dsm => build_problem_dsm(inputs, arrays),
        ModelKind::Ucm => {
            check_arrays(inputs, arrays)?;
            build_problem_ucm(inputs)
        }
    }
}

fn check_arrays(inputs: &DesignInputs, arrays: &ArrayConfig) -> Result<()> {
    if inputs.n_tx() != arrays.n_tx {
        return Err(Error::DimensionMismatch(format!(
            "channels have {} transmit antennas, array has {}",
            inputs.n_tx(),
            arrays.n_tx
        )));
    }
    Ok(())
}
