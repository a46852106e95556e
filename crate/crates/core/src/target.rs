//! Extended-target response models.
//!
//! A target made of `T` point scatterers has response
//! `G = Σ_t α_t · b(θ_t) · a(θ_t)ᵀ` (plain transpose on the transmit side).
//! Under the parametric model the angles are tied to a central angle `θ₀`
//! and a spread `Δ` by
//!
//! ```text
//! θ_t = θ₀ + Δ · (2t − T − 1) / (2(T − 1)),   t = 1..T
//! ```
//!
//! so the scatterers sit uniformly on `[θ₀ − Δ/2, θ₀ + Δ/2]`.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::linalg::{vec_cm, CMat, RMat, J};

/// Which target description a design or CRB refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Psm,
    Dsm,
    Ucm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Psm, ModelKind::Dsm, ModelKind::Ucm];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Psm => "psm",
            ModelKind::Dsm => "dsm",
            ModelKind::Ucm => "ucm",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "psm" => Ok(ModelKind::Psm),
            "dsm" => Ok(ModelKind::Dsm),
            "ucm" => Ok(ModelKind::Ucm),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected psm, dsm or ucm)"
            ))),
        }
    }
}

/// Parametric (PSM) target: `ξ = [θ₀, Δ, Re α, Im α]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetParams {
    pub theta0: f64,
    pub delta: f64,
    pub alpha: Vec<Complex64>,
}

impl TargetParams {
    pub fn new(theta0: f64, delta: f64, alpha: Vec<Complex64>) -> Result<Self> {
        let p = Self {
            theta0,
            delta,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    /// `T` scatterers with identical real gain.
    pub fn uniform(theta0: f64, delta: f64, n_scatterers: usize, gain: f64) -> Result<Self> {
        Self::new(theta0, delta, vec![Complex64::new(gain, 0.0); n_scatterers])
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "parametric target needs at least 2 scatterers, got {}",
                self.alpha.len()
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "angular spread must be non-negative, got {}",
                self.delta
            )));
        }
        let lo = self.theta0 - self.delta / 2.0;
        let hi = self.theta0 + self.delta / 2.0;
        if !(lo > -FRAC_PI_2 && hi < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "target sector [{lo}, {hi}] rad leaves (-π/2, π/2)"
            )));
        }
        if self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("non-finite scatterer gain".into()));
        }
        Ok(())
    }

    pub fn n_scatterers(&self) -> usize {
        self.alpha.len()
    }

    /// Length of `ξ`, i.e. `2T + 2`.
    pub fn n_params(&self) -> usize {
        2 * self.alpha.len() + 2
    }

    pub fn angles(&self) -> Vec<f64> {
        scatterer_angles_unchecked(self.theta0, self.delta, self.alpha.len())
    }

    /// Real parameter vector `[θ₀, Δ, Re α, Im α]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = vec![self.theta0, self.delta];
        v.extend(self.alpha.iter().map(|a| a.re));
        v.extend(self.alpha.iter().map(|a| a.im));
        v
    }

    /// Inverse of [`TargetParams::to_vector`] (no validation).
    pub fn from_vector(v: &[f64]) -> Self {
        let t = (v.len() - 2) / 2;
        let alpha = (0..t)
            .map(|i| Complex64::new(v[2 + i], v[2 + t + i]))
            .collect();
        Self {
            theta0: v[0],
            delta: v[1],
            alpha,
        }
    }
}

/// Discrete (DSM) target: `ξ̃ = [θ_1..θ_T, Re α, Im α]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmParams {
    pub thetas: Vec<f64>,
    pub alpha: Vec<Complex64>,
}

impl DsmParams {
    pub fn new(thetas: Vec<f64>, alpha: Vec<Complex64>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != alpha.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} angles vs {} gains",
                thetas.len(),
                alpha.len()
            )));
        }
        if thetas.iter().any(|t| !(t.abs() < FRAC_PI_2)) {
            return Err(Error::InvalidParameter(
                "scatterer angle outside (-π/2, π/2)".into(),
            ));
        }
        if thetas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "scatterer angles must be strictly increasing".into(),
            ));
        }
        Ok(Self { thetas, alpha })
    }

    /// The discrete model describing the same physical target as `p`.
    /// Fails when `Δ = 0` since the angles then coincide.
    pub fn from_psm(p: &TargetParams) -> Result<Self> {
        p.validate()?;
        Self::new(p.angles(), p.alpha.clone())
    }

    pub fn n_scatterers(&self) -> usize {
        self.thetas.len()
    }
}

/// `∂θ_t/∂Δ` for scatterer index `i` (0-based) out of `t_count`.
pub fn spread_coefficient(i: usize, t_count: usize) -> f64 {
    (2.0 * i as f64 + 1.0 - t_count as f64) / (2.0 * (t_count as f64 - 1.0))
}

/// Scatterer angles uniformly spaced on `[θ₀ − Δ/2, θ₀ + Δ/2]`.
pub fn scatterer_angles(theta0: f64, delta: f64, t_count: usize) -> Result<Vec<f64>> {
    if t_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "scatterer spacing is undefined for T = {t_count} (need T >= 2)"
        )));
    }
    Ok(scatterer_angles_unchecked(theta0, delta, t_count))
}

fn scatterer_angles_unchecked(theta0: f64, delta: f64, t_count: usize) -> Vec<f64> {
    (0..t_count)
        .map(|i| theta0 + delta * spread_coefficient(i, t_count))
        .collect()
}

/// `b(θ) a(θ)ᵀ`
fn outer_bat(arrays: &ArrayConfig, theta: f64) -> CMat {
    arrays.rx(theta) * arrays.tx(theta).transpose()
}

/// `ḃ(θ) a(θ)ᵀ + b(θ) ȧ(θ)ᵀ`
fn outer_bat_derivative(arrays: &ArrayConfig, theta: f64) -> CMat {
    arrays.rx_derivative(theta) * arrays.tx(theta).transpose()
        + arrays.rx(theta) * arrays.tx_derivative(theta).transpose()
}

/// Target response `G` (N_r × N_t).
pub fn response_matrix(xi: &TargetParams, arrays: &ArrayConfig) -> Result<CMat> {
    xi.validate()?;
    let mut g = CMat::zeros(arrays.n_rx, arrays.n_tx);
    for (theta, &alpha) in xi.angles().into_iter().zip(&xi.alpha) {
        g += outer_bat(arrays, theta) * alpha;
    }
    Ok(g)
}

/// `G` and its partial derivatives with respect to the PSM parameters.
#[derive(Debug, Clone)]
pub struct ResponseDerivatives {
    pub g: CMat,
    pub g_theta0: CMat,
    pub g_delta: CMat,
    /// `G_t = ∂G/∂Re α_t = b(θ_t) a(θ_t)ᵀ`; `∂G/∂Im α_t = j·G_t`.
    pub g_t: Vec<CMat>,
}

pub fn response_derivatives(
    xi: &TargetParams,
    arrays: &ArrayConfig,
) -> Result<ResponseDerivatives> {
    xi.validate()?;
    let t_count = xi.n_scatterers();
    let (nr, nt) = (arrays.n_rx, arrays.n_tx);
    let mut g = CMat::zeros(nr, nt);
    let mut g_theta0 = CMat::zeros(nr, nt);
    let mut g_delta = CMat::zeros(nr, nt);
    let mut g_t = Vec::with_capacity(t_count);
    for (i, theta) in xi.angles().into_iter().enumerate() {
        let alpha = xi.alpha[i];
        let gt = outer_bat(arrays, theta);
        let dt = outer_bat_derivative(arrays, theta) * alpha;
        g += &gt * alpha;
        g_delta += &dt * Complex64::new(spread_coefficient(i, t_count), 0.0);
        g_theta0 += dt;
        g_t.push(gt);
    }
    Ok(ResponseDerivatives {
        g,
        g_theta0,
        g_delta,
        g_t,
    })
}

/// Per-scatterer derivatives for the discrete model: `∂G/∂θ_t` and `G_t`.
#[derive(Debug, Clone)]
pub struct DsmDerivatives {
    pub g_thetas: Vec<CMat>,
    pub g_t: Vec<CMat>,
}

pub fn dsm_derivatives(dsm: &DsmParams, arrays: &ArrayConfig) -> DsmDerivatives {
    let g_thetas = dsm
        .thetas
        .iter()
        .zip(&dsm.alpha)
        .map(|(&theta, &alpha)| outer_bat_derivative(arrays, theta) * alpha)
        .collect();
    let g_t = dsm
        .thetas
        .iter()
        .map(|&theta| outer_bat(arrays, theta))
        .collect();
    DsmDerivatives { g_thetas, g_t }
}

/// `J_G = ∂vec(G)/∂ξ`, shape `(N_t·N_r) × (2T + 2)`, column-major `vec`.
pub fn jacobian_ucm(xi: &TargetParams, arrays: &ArrayConfig) -> Result<CMat> {
    let d = response_derivatives(xi, arrays)?;
    let t_count = xi.n_scatterers();
    let rows = arrays.n_tx * arrays.n_rx;
    let mut jac = CMat::zeros(rows, 2 * t_count + 2);
    jac.set_column(0, &vec_cm(&d.g_theta0));
    jac.set_column(1, &vec_cm(&d.g_delta));
    for (t, gt) in d.g_t.iter().enumerate() {
        let v = vec_cm(gt);
        jac.set_column(2 + t_count + t, &(&v * J));
        jac.set_column(2 + t, &v);
    }
    Ok(jac)
}

/// `J_ξ̃ = ∂ξ̃/∂ξ`, shape `3T × (2T + 2)`.
pub fn jacobian_dsm(xi: &TargetParams) -> Result<RMat> {
    xi.validate()?;
    let t_count = xi.n_scatterers();
    let mut jac = RMat::zeros(3 * t_count, 2 * t_count + 2);
    for t in 0..t_count {
        jac[(t, 0)] = 1.0;
        jac[(t, 1)] = spread_coefficient(t, t_count);
    }
    for k in 0..2 * t_count {
        jac[(t_count + k, 2 + k)] = 1.0;
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;
    use proptest::prelude::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn angles_for_default_target() {
        let a = scatterer_angles(deg(30.0), deg(6.0), 4).unwrap();
        for (x, e) in a.iter().zip([27.0, 29.0, 31.0, 33.0]) {
            assert!((x.to_degrees() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn two_scatterers_sit_at_the_edges() {
        let a = scatterer_angles(0.3, 0.1, 2).unwrap();
        assert!((a[0] - 0.25).abs() < 1e-15 && (a[1] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn zero_spread_collapses() {
        let a = scatterer_angles(0.3, 0.0, 5).unwrap();
        assert!(a.iter().all(|&x| x == 0.3));
    }

    #[test]
    fn single_scatterer_rejected() {
        assert!(scatterer_angles(0.3, 0.1, 1).is_err());
        assert!(scatterer_angles(0.3, 0.1, 0).is_err());
        assert!(TargetParams::uniform(0.3, 0.1, 1, 1.0).is_err());
    }

    #[test]
    fn invalid_sector_rejected() {
        assert!(TargetParams::uniform(1.5, 0.3, 3, 1.0).is_err());
        assert!(TargetParams::uniform(0.0, -0.1, 3, 1.0).is_err());
    }

    #[test]
    fn single_active_scatterer_is_rank_one() {
        let arrays = ArrayConfig::ula(6, 8).unwrap();
        let xi = TargetParams::new(
            0.2,
            0.1,
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        let g = response_matrix(&xi, &arrays).unwrap();
        let expect = arrays.rx(0.15) * arrays.tx(0.15).transpose();
        assert!((&g - &expect).norm() < 1e-12);
        assert_eq!(numerical_rank(&g, 1e-10), 1);
    }

    #[test]
    fn zero_gains_give_zero_response() {
        let arrays = ArrayConfig::ula(4, 5).unwrap();
        let xi = TargetParams::uniform(0.2, 0.1, 3, 0.0).unwrap();
        assert_eq!(response_matrix(&xi, &arrays).unwrap().norm(), 0.0);
    }

    #[test]
    fn default_target_has_full_rank_four() {
        let arrays = ArrayConfig::ula(20, 60).unwrap();
        let xi = TargetParams::uniform(deg(30.0), deg(6.0), 4, 0.001).unwrap();
        let g = response_matrix(&xi, &arrays).unwrap();
        assert_eq!(numerical_rank(&g, 1e-10), 4);
    }

    #[test]
    fn opposite_gains_at_zero_spread_cancel() {
        let arrays = ArrayConfig::ula(4, 4).unwrap();
        let xi = TargetParams::new(
            0.4,
            0.0,
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        let d = response_derivatives(&xi, &arrays).unwrap();
        assert!(d.g_theta0.norm() < 1e-12);
    }

    #[test]
    fn response_is_gain_weighted_sum_of_unit_responses() {
        let arrays = ArrayConfig::ula(5, 7).unwrap();
        let xi = TargetParams::new(
            -0.3,
            0.2,
            vec![
                Complex64::new(0.3, -0.1),
                Complex64::new(-0.7, 0.2),
                Complex64::new(0.1, 0.9),
            ],
        )
        .unwrap();
        let d = response_derivatives(&xi, &arrays).unwrap();
        let g = response_matrix(&xi, &arrays).unwrap();
        let mut sum = CMat::zeros(7, 5);
        for (a, gt) in xi.alpha.iter().zip(&d.g_t) {
            sum += gt * *a;
        }
        assert!((&sum - &g).norm() <= 1e-14 * g.norm());
        assert!((&d.g - &g).norm() <= 1e-14 * g.norm());
    }

    #[test]
    fn dsm_jacobian_for_four_scatterers() {
        let xi = TargetParams::uniform(0.5, 0.1, 4, 1.0).unwrap();
        let j = jacobian_dsm(&xi).unwrap();
        assert_eq!(j.shape(), (12, 10));
        let expect = [-0.5, -1.0 / 6.0, 1.0 / 6.0, 0.5];
        for t in 0..4 {
            assert_eq!(j[(t, 0)], 1.0);
            assert!((j[(t, 1)] - expect[t]).abs() < 1e-15);
        }
        for r in 4..12 {
            assert_eq!(j.row(r).sum(), 1.0);
        }
    }

    #[test]
    fn ucm_jacobian_columns() {
        let arrays = ArrayConfig::ula(3, 4).unwrap();
        let xi = TargetParams::new(
            0.1,
            0.2,
            vec![Complex64::new(0.5, 0.5), Complex64::new(1.0, -0.2)],
        )
        .unwrap();
        let j = jacobian_ucm(&xi, &arrays).unwrap();
        let d = response_derivatives(&xi, &arrays).unwrap();
        assert_eq!(j.shape(), (12, 6));
        assert_eq!(j.column(0).into_owned(), vec_cm(&d.g_theta0));
        for t in 0..2 {
            let diff = j.column(4 + t) - j.column(2 + t) * J;
            assert!(diff.norm() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn angles_symmetric_about_centre(theta0 in -1.0f64..1.0, delta in 0.0f64..0.5, t in 2usize..12) {
            let a = scatterer_angles(theta0, delta, t).unwrap();
            for i in 0..t {
                prop_assert!((a[i] + a[t - 1 - i] - 2.0 * theta0).abs() < 1e-12);
            }
            let mean = a.iter().sum::<f64>() / t as f64;
            prop_assert!((mean - theta0).abs() < 1e-12);
        }

        #[test]
        fn rank_bounded_by_scatterers_and_arrays(
            theta0 in -0.9f64..0.9, delta in 0.0f64..0.3, t in 2usize..6,
            nt in 1usize..7, nr in 1usize..7, seed in 0u64..1000,
        ) {
            let alpha = (0..t)
                .map(|i| Complex64::new(((seed + i as u64) % 7) as f64 - 3.0, ((seed * 3 + i as u64) % 5) as f64 - 2.0))
                .collect();
            let xi = TargetParams::new(theta0, delta, alpha).unwrap();
            let arrays = ArrayConfig::ula(nt, nr).unwrap();
            let g = response_matrix(&xi, &arrays).unwrap();
            prop_assert!(numerical_rank(&g, 1e-10) <= t.min(nt).min(nr));
        }
    }
}
