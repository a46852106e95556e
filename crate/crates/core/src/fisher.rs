//! Fisher information for the three target models and the CRB on the
//! angle parameters.
//!
//! With `η = vec(G W S)`, white noise of variance `σ²_r` and
//! `E{S Sᴴ} = L·I`, a real parameter whose score direction is
//! `∂η/∂ξ_i = c_i · vec(D_i W S)` contributes
//!
//! ```text
//! F(i, j) = (2L/σ²_r) · Re{ conj(c_i) · c_j · Tr{D_j R_w D_iᴴ} }
//! ```
//!
//! where `D_i` is a derivative of `G` and `c_i ∈ {1, j}`. Every model below
//! is an instance of this form with a different list of `(D_i, c_i)`.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::linalg::{
    check_hermitian_psd, condition_number_sym, real_embedding, symmetric_eigenvalues, symmetrize,
    trace_re, CMat, RMat, J,
};
use crate::target::{
    dsm_derivatives, jacobian_dsm, jacobian_ucm, response_derivatives, DsmParams, ModelKind,
    TargetParams,
};

/// Condition number above which an information block is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Radar noise power and number of snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseAndDwell {
    pub sigma2_r: f64,
    pub dwell: usize,
}

impl NoiseAndDwell {
    pub fn new(sigma2_r: f64, dwell: usize) -> Result<Self> {
        if !(sigma2_r > 0.0 && sigma2_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radar noise variance must be positive, got {sigma2_r}"
            )));
        }
        if dwell == 0 {
            return Err(Error::InvalidParameter("dwell L must be at least 1".into()));
        }
        Ok(Self { sigma2_r, dwell })
    }

    /// `2L/σ²_r`
    pub fn prefactor(&self) -> f64 {
        2.0 * self.dwell as f64 / self.sigma2_r
    }
}

/// Real symmetric Fisher information with labelled parameters.
#[derive(Debug, Clone)]
pub struct FimMatrix {
    f: RMat,
    labels: Vec<String>,
}

impl FimMatrix {
    /// Symmetrizes `f` once.
    pub fn new(f: RMat, labels: Vec<String>) -> Result<Self> {
        if !f.is_square() || f.nrows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "FIM is {}x{} with {} labels",
                f.nrows(),
                f.ncols(),
                labels.len()
            )));
        }
        Ok(Self {
            f: symmetrize(&f),
            labels,
        })
    }

    pub fn matrix(&self) -> &RMat {
        &self.f
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        symmetric_eigenvalues(&self.f)
            .first()
            .copied()
            .unwrap_or(0.0)
    }

    /// PSD up to `-1e-9 · tr/n`.
    pub fn is_psd(&self) -> bool {
        let n = self.dim().max(1) as f64;
        self.min_eigenvalue() >= -1e-9 * self.f.trace().abs() / n
    }

    /// Diagonal of `F⁻¹`: CRBs for every parameter.
    pub fn crb_full(&self) -> Result<Vec<f64>> {
        let inv = spd_inverse(&self.f, "Fisher information")?;
        Ok(inv.diagonal().iter().copied().collect())
    }
}

pub fn psm_labels(t_count: usize) -> Vec<String> {
    let mut l = vec!["theta0".to_string(), "delta".to_string()];
    l.extend((1..=t_count).map(|t| format!("re_alpha{t}")));
    l.extend((1..=t_count).map(|t| format!("im_alpha{t}")));
    l
}

pub fn dsm_labels(t_count: usize) -> Vec<String> {
    let mut l: Vec<String> = (1..=t_count).map(|t| format!("theta{t}")).collect();
    l.extend((1..=t_count).map(|t| format!("re_alpha{t}")));
    l.extend((1..=t_count).map(|t| format!("im_alpha{t}")));
    l
}

/// A linear map `R_w ↦ F(R_w)` given by derivative matrices and score phases.
///
/// Parameter `i` has score `phases[i] · vec(mats[index[i]] W S)`.
#[derive(Debug, Clone)]
pub struct FimModel {
    mats: Vec<CMat>,
    index: Vec<usize>,
    phases: Vec<Complex64>,
    prefactor: f64,
    labels: Vec<String>,
}

impl FimModel {
    pub fn psm(xi: &TargetParams, arrays: &ArrayConfig, noise: &NoiseAndDwell) -> Result<Self> {
        let d = response_derivatives(xi, arrays)?;
        let t_count = xi.n_scatterers();
        let mut mats = vec![d.g_theta0, d.g_delta];
        mats.extend(d.g_t);
        let mut index = vec![0, 1];
        let mut phases = vec![Complex64::new(1.0, 0.0); 2 + t_count];
        index.extend(2..2 + t_count);
        index.extend(2..2 + t_count);
        phases.extend(std::iter::repeat_n(J, t_count));
        Ok(Self {
            mats,
            index,
            phases,
            prefactor: noise.prefactor(),
            labels: psm_labels(t_count),
        })
    }

    pub fn dsm(dsm: &DsmParams, arrays: &ArrayConfig, noise: &NoiseAndDwell) -> Result<Self> {
        let d = dsm_derivatives(dsm, arrays);
        let t_count = dsm.n_scatterers();
        let mut mats = d.g_thetas;
        mats.extend(d.g_t);
        let mut index: Vec<usize> = (0..t_count).collect();
        index.extend(t_count..2 * t_count);
        index.extend(t_count..2 * t_count);
        let mut phases = vec![Complex64::new(1.0, 0.0); 2 * t_count];
        phases.extend(std::iter::repeat_n(J, t_count));
        Ok(Self {
            mats,
            index,
            phases,
            prefactor: noise.prefactor(),
            labels: dsm_labels(t_count),
        })
    }

    pub fn n_params(&self) -> usize {
        self.index.len()
    }

    pub fn n_tx(&self) -> usize {
        self.mats[0].ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Score matrix `D` and phase `c` of parameter `i`.
    pub fn score(&self, i: usize) -> (&CMat, Complex64) {
        (&self.mats[self.index[i]], self.phases[i])
    }

    /// Evaluates the map at any Hermitian `R` (no PSD requirement), computing
    /// `Tr{D_j R D_iᴴ}` as an elementwise inner product of `D_j R` with `D_i`.
    pub fn evaluate(&self, r: &CMat) -> RMat {
        let m = self.mats.len();
        let products: Vec<CMat> = self.mats.iter().map(|d| d * r).collect();
        let mut traces = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                traces[(i, j)] = products[j]
                    .iter()
                    .zip(self.mats[i].iter())
                    .map(|(p, d)| p * d.conj())
                    .sum();
            }
        }
        let n = self.n_params();
        RMat::from_fn(n, n, |p, q| {
            let t = traces[(self.index[p], self.index[q])];
            self.prefactor * (self.phases[p].conj() * self.phases[q] * t).re
        })
    }

    /// Gram matrices `D_iᴴ D_j` for every pair of distinct derivative matrices,
    /// row-major over `(i, j)`. `Tr{D_j R D_iᴴ} = Σ_ab R_ab (D_iᴴ D_j)_ba`.
    pub fn grams(&self) -> Vec<CMat> {
        let m = self.mats.len();
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                out.push(self.mats[i].adjoint() * &self.mats[j]);
            }
        }
        out
    }

    pub fn n_mats(&self) -> usize {
        self.mats.len()
    }

    /// `(matrix index, phase)` pairs per parameter, for coefficient extraction.
    pub fn param_structure(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.index.iter().copied().zip(self.phases.iter().copied())
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn assemble(&self, r_w: &CMat) -> Result<FimMatrix> {
        if r_w.nrows() != self.n_tx() {
            return Err(Error::DimensionMismatch(format!(
                "R_w is {}x{}, array has {} transmit elements",
                r_w.nrows(),
                r_w.ncols(),
                self.n_tx()
            )));
        }
        check_hermitian_psd(r_w)?;
        FimMatrix::new(self.evaluate(r_w), self.labels.clone())
    }
}

/// PSM Fisher information, ordering `[θ₀, Δ, Re α, Im α]`.
pub fn assemble_fim_psm(
    xi: &TargetParams,
    r_w: &CMat,
    noise: &NoiseAndDwell,
    arrays: &ArrayConfig,
) -> Result<FimMatrix> {
    FimModel::psm(xi, arrays, noise)?.assemble(r_w)
}

/// DSM Fisher information, ordering `[θ_1..θ_T, Re α, Im α]`.
pub fn assemble_fim_dsm(
    dsm: &DsmParams,
    r_w: &CMat,
    noise: &NoiseAndDwell,
    arrays: &ArrayConfig,
) -> Result<FimMatrix> {
    FimModel::dsm(dsm, arrays, noise)?.assemble(r_w)
}

/// Fisher information of the unstructured model for the complex entries of
/// `vec(G)`: `F_G = (L/σ²_r)(R_w ⊗ I_{N_r})`.
#[derive(Debug, Clone)]
pub struct UcmFim {
    r_w: CMat,
    n_rx: usize,
    scale: f64,
}

pub fn assemble_fim_ucm(r_w: &CMat, n_rx: usize, noise: &NoiseAndDwell) -> Result<UcmFim> {
    if n_rx == 0 {
        return Err(Error::InvalidParameter("n_rx must be positive".into()));
    }
    check_hermitian_psd(r_w)?;
    let re = real_embedding(r_w);
    let condition = condition_number_sym(&re);
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned {
            what: "R_w (unstructured model)",
            condition,
        });
    }
    Ok(UcmFim {
        r_w: r_w.clone(),
        n_rx,
        scale: noise.dwell as f64 / noise.sigma2_r,
    })
}

impl UcmFim {
    /// `(L/σ²_r)(R_w ⊗ I)` as an explicit `N_t N_r × N_t N_r` matrix.
    pub fn compact(&self) -> CMat {
        self.r_w.kronecker(&CMat::identity(self.n_rx, self.n_rx)) * Complex64::new(self.scale, 0.0)
    }

    /// CRB for `vec(G)`: `F_G⁻¹ = (σ²_r/L)(R_w⁻¹ ⊗ I)`.
    pub fn crb_compact(&self) -> Result<CMat> {
        let inv = self
            .r_w
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditioned {
                what: "R_w (unstructured model)",
                condition: f64::INFINITY,
            })?;
        Ok(inv.kronecker(&CMat::identity(self.n_rx, self.n_rx))
            * Complex64::new(1.0 / self.scale, 0.0))
    }

    /// `Tr{C_G} = (σ²_r/L) · N_r · Tr{R_w⁻¹}`.
    pub fn crb_trace(&self) -> Result<f64> {
        Ok(trace_re(&self.crb_compact()?))
    }

    /// Real FIM for `[Re vec G, Im vec G]`: `2·[[Re C, −Im C], [Im C, Re C]]`
    /// with `C = conj(F_G)`.
    pub fn real_embedding(&self) -> Result<FimMatrix> {
        let c = self.compact().map(|z| z.conj());
        let n = c.nrows();
        let mut labels: Vec<String> = (0..n).map(|k| format!("re_g{k}")).collect();
        labels.extend((0..n).map(|k| format!("im_g{k}")));
        FimMatrix::new(real_embedding(&c) * 2.0, labels)
    }

    pub fn n_tx(&self) -> usize {
        self.r_w.nrows()
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }
}

/// Top-left angle block, coupling block and nuisance block of a FIM.
#[derive(Debug, Clone, PartialEq)]
pub struct FimPartition {
    pub f1: RMat,
    pub f2: RMat,
    pub f4: RMat,
}

impl FimPartition {
    pub fn reassemble(&self) -> RMat {
        let (a, b) = (self.f1.nrows(), self.f4.nrows());
        let mut f = RMat::zeros(a + b, a + b);
        f.view_mut((0, 0), (a, a)).copy_from(&self.f1);
        f.view_mut((0, a), (a, b)).copy_from(&self.f2);
        f.view_mut((a, 0), (b, a)).copy_from(&self.f2.transpose());
        f.view_mut((a, a), (b, b)).copy_from(&self.f4);
        f
    }
}

/// Splits `F` after the first `n_angles` parameters. The remainder must hold
/// the `2T` gain parameters, so `dim = n_angles + 2T` for some `T`.
pub fn partition_fim(f: &FimMatrix, n_angles: usize) -> Result<FimPartition> {
    let n = f.dim();
    let rest = n.saturating_sub(n_angles);
    if n_angles == 0 || n_angles >= n || !rest.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!(
            "cannot split a {n}x{n} FIM into {n_angles} angles plus 2T gains"
        )));
    }
    let m = f.matrix();
    Ok(FimPartition {
        f1: m.view((0, 0), (n_angles, n_angles)).into_owned(),
        f2: m.view((0, n_angles), (n_angles, rest)).into_owned(),
        f4: symmetrize(&m.view((n_angles, n_angles), (rest, rest)).into_owned()),
    })
}

/// CRBs on the angle parameters after marginalizing the gains.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbReport {
    /// CRB of the first angle parameter (θ₀ for PSM), rad².
    pub crb_theta0: f64,
    /// CRB of the second angle parameter (Δ for PSM), rad².
    pub crb_delta: f64,
    /// Per-component gain CRBs `[Re α, Im α]`; empty unless requested.
    pub crb_alpha: Vec<f64>,
    pub rcrb_theta0_deg: f64,
    pub rcrb_delta_deg: f64,
    pub condition_f4: f64,
    /// Diagonal of `(F₁ − F₂F₄⁻¹F₂ᵀ)⁻¹`.
    pub angle_crbs: Vec<f64>,
    /// Trace of `(F₁ − F₂F₄⁻¹F₂ᵀ)⁻¹`, the design objective.
    pub crb_trace: f64,
}

/// `√crb` in degrees.
pub fn rcrb_deg(crb: f64) -> f64 {
    crb.max(0.0).sqrt().to_degrees()
}

fn spd_inverse(m: &RMat, what: &'static str) -> Result<RMat> {
    let condition = condition_number_sym(m);
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned { what, condition });
    }
    let chol = Cholesky::new(symmetrize(m)).ok_or(Error::IllConditioned { what, condition })?;
    Ok(chol.inverse())
}

/// Schur complement of `F₄`: `F₁ − F₂ F₄⁻¹ F₂ᵀ`.
pub fn schur_complement(p: &FimPartition) -> Result<(RMat, f64)> {
    let condition_f4 = condition_number_sym(&p.f4);
    if !(condition_f4 < MAX_CONDITION) {
        return Err(Error::IllConditioned {
            what: "gain information block F4",
            condition: condition_f4,
        });
    }
    let chol = Cholesky::new(p.f4.clone()).ok_or(Error::IllConditioned {
        what: "gain information block F4",
        condition: condition_f4,
    })?;
    let x = chol.solve(&p.f2.transpose());
    Ok((symmetrize(&(&p.f1 - &p.f2 * x)), condition_f4))
}

pub fn crb_angles(p: &FimPartition) -> Result<CrbReport> {
    let (schur, condition_f4) = schur_complement(p)?;
    let inv = spd_inverse(&schur, "angle Schur complement")?;
    let angle_crbs: Vec<f64> = inv.diagonal().iter().copied().collect();
    let crb_theta0 = angle_crbs[0];
    let crb_delta = angle_crbs.get(1).copied().unwrap_or(f64::NAN);
    Ok(CrbReport {
        crb_theta0,
        crb_delta,
        crb_alpha: Vec::new(),
        rcrb_theta0_deg: rcrb_deg(crb_theta0),
        rcrb_delta_deg: rcrb_deg(crb_delta),
        condition_f4,
        crb_trace: angle_crbs.iter().sum(),
        angle_crbs,
    })
}

/// [`crb_angles`] on the partition of `f`, optionally adding the gain CRBs
/// from the full inverse.
pub fn crb_report(f: &FimMatrix, n_angles: usize, with_alpha: bool) -> Result<CrbReport> {
    let mut report = crb_angles(&partition_fim(f, n_angles)?)?;
    if with_alpha {
        report.crb_alpha = f.crb_full()?[n_angles..].to_vec();
    }
    Ok(report)
}

/// `J ᵀ F J` for a real Jacobian (DSM → PSM coordinates).
pub fn transform_fim(f: &FimMatrix, jacobian: &RMat, labels: Vec<String>) -> Result<FimMatrix> {
    if jacobian.nrows() != f.dim() || jacobian.ncols() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian {}x{} against FIM of size {} and {} target labels",
            jacobian.nrows(),
            jacobian.ncols(),
            f.dim(),
            labels.len()
        )));
    }
    FimMatrix::new(jacobian.transpose() * f.matrix() * jacobian, labels)
}

/// `F_ξ(i, j) = 2·Re{ j_iᴴ conj(F_G) j_j }` for the complex Jacobian
/// `J_G = ∂vec(G)/∂ξ`. `conj(F_G) vec(D) = (L/σ²_r) vec(D R_w)`, so the
/// Kronecker product is never formed.
pub fn transform_fim_ucm(f: &UcmFim, jacobian: &CMat, labels: Vec<String>) -> Result<FimMatrix> {
    let (nt, nr) = (f.n_tx(), f.n_rx());
    if jacobian.nrows() != nt * nr || jacobian.ncols() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian {}x{} against UCM FIM of size {} and {} target labels",
            jacobian.nrows(),
            jacobian.ncols(),
            nt * nr,
            labels.len()
        )));
    }
    let n = jacobian.ncols();
    let mut applied = CMat::zeros(nt * nr, n);
    for c in 0..n {
        let d = CMat::from_column_slice(nr, nt, jacobian.column(c).as_slice());
        let y = d * &f.r_w * Complex64::new(f.scale, 0.0);
        applied.set_column(c, &nalgebra::DVector::from_column_slice(y.as_slice()));
    }
    let g = jacobian.adjoint() * applied;
    FimMatrix::new(g.map(|z| 2.0 * z.re), labels)
}

/// CRB on `(θ₀, Δ)` achieved by `r_w`, computed through the FIM of `model`
/// and its Jacobian into parametric coordinates.
pub fn crb_target_coordinates(
    model: ModelKind,
    xi: &TargetParams,
    r_w: &CMat,
    noise: &NoiseAndDwell,
    arrays: &ArrayConfig,
) -> Result<CrbReport> {
    let labels = psm_labels(xi.n_scatterers());
    let f = match model {
        ModelKind::Psm => assemble_fim_psm(xi, r_w, noise, arrays)?,
        ModelKind::Dsm => {
            let dsm = DsmParams::from_psm(xi)?;
            transform_fim(
                &assemble_fim_dsm(&dsm, r_w, noise, arrays)?,
                &jacobian_dsm(xi)?,
                labels,
            )?
        }
        ModelKind::Ucm => {
            let ucm = assemble_fim_ucm(r_w, arrays.n_rx, noise)?;
            transform_fim_ucm(&ucm, &jacobian_ucm(xi, arrays)?, labels)?
        }
    };
    crb_report(&f, 2, false)
}
