//! Reference implementations shared by the integration tests.
//!
//! Everything here is written from the signal model directly and avoids the
//! crate's own derivative and FIM code, so agreement is meaningful.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use isac_crb::channel::{draw_user_angles, generate_channels_stream, trial_stream};
use isac_crb::experiment::{db_to_linear, ExperimentConfig};
use isac_crb::sdp::DesignInputs;
use isac_crb::{ArrayConfig, TargetParams};

pub type C = Complex64;
pub type CM = DMatrix<Complex64>;
pub type RM = DMatrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut impl Rng) -> C {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(re, im) / 2f64.sqrt()
}

pub fn random_cmat(r: usize, c: usize, rng: &mut impl Rng) -> CM {
    CM::from_fn(r, c, |_, _| cn(rng))
}

/// Random full-rank `R_w = W Wᴴ` scaled to trace `power`.
pub fn random_covariance(n: usize, power: f64, rng: &mut impl Rng) -> (CM, CM) {
    let w = random_cmat(n, n, rng);
    let r = &w * w.adjoint();
    let s = (power / r.trace().re).sqrt();
    let w = w * C::new(s, 0.0);
    let r = &w * w.adjoint();
    (w, r)
}

pub fn rel_fro(a: &RM, b: &RM) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn rel_fro_c(a: &CM, b: &CM) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// `[e^{j2πd m sinθ}]_m`
pub fn steer(theta: f64, n: usize, d: f64) -> CM {
    CM::from_fn(n, 1, |m, _| {
        C::from_polar(1.0, 2.0 * PI * d * m as f64 * theta.sin())
    })
}

/// `∂/∂θ` of [`steer`].
pub fn steer_dot(theta: f64, n: usize, d: f64) -> CM {
    let k = 2.0 * PI * d * theta.cos();
    CM::from_fn(n, 1, |m, _| {
        C::new(0.0, k * m as f64) * C::from_polar(1.0, 2.0 * PI * d * m as f64 * theta.sin())
    })
}

fn bat(theta: f64, a: &ArrayConfig) -> CM {
    steer(theta, a.n_rx, a.spacing) * steer(theta, a.n_tx, a.spacing).transpose()
}

fn bat_dot(theta: f64, a: &ArrayConfig) -> CM {
    steer_dot(theta, a.n_rx, a.spacing) * steer(theta, a.n_tx, a.spacing).transpose()
        + steer(theta, a.n_rx, a.spacing) * steer_dot(theta, a.n_tx, a.spacing).transpose()
}

pub fn psm_angles(theta0: f64, delta: f64, t: usize) -> Vec<f64> {
    (1..=t)
        .map(|i| theta0 + delta * (2.0 * i as f64 - t as f64 - 1.0) / (2.0 * (t as f64 - 1.0)))
        .collect()
}

/// `∂G/∂ξ_i` for `ξ = [θ₀, Δ, Re α, Im α]`.
pub fn psm_partials(xi: &TargetParams, a: &ArrayConfig) -> Vec<CM> {
    let t = xi.alpha.len();
    let angles = psm_angles(xi.theta0, xi.delta, t);
    let mut d_theta0 = CM::zeros(a.n_rx, a.n_tx);
    let mut d_delta = CM::zeros(a.n_rx, a.n_tx);
    for (i, &th) in angles.iter().enumerate() {
        let coef = (2.0 * (i + 1) as f64 - t as f64 - 1.0) / (2.0 * (t as f64 - 1.0));
        let d = bat_dot(th, a) * xi.alpha[i];
        d_delta += &d * C::new(coef, 0.0);
        d_theta0 += d;
    }
    let mut out = vec![d_theta0, d_delta];
    out.extend(angles.iter().map(|&th| bat(th, a)));
    out.extend(angles.iter().map(|&th| bat(th, a) * C::new(0.0, 1.0)));
    out
}

/// `∂G/∂ξ̃_i` for `ξ̃ = [θ_1..θ_T, Re α, Im α]`.
pub fn dsm_partials(thetas: &[f64], alpha: &[C], a: &ArrayConfig) -> Vec<CM> {
    let mut out: Vec<CM> = thetas
        .iter()
        .zip(alpha)
        .map(|(&th, &al)| bat_dot(th, a) * al)
        .collect();
    out.extend(thetas.iter().map(|&th| bat(th, a)));
    out.extend(thetas.iter().map(|&th| bat(th, a) * C::new(0.0, 1.0)));
    out
}

pub fn response(xi: &TargetParams, a: &ArrayConfig) -> CM {
    let angles = psm_angles(xi.theta0, xi.delta, xi.alpha.len());
    angles
        .iter()
        .zip(&xi.alpha)
        .fold(CM::zeros(a.n_rx, a.n_tx), |g, (&th, &al)| {
            g + bat(th, a) * al
        })
}

/// Waveform `S = √L · Qᴴ` with orthonormal `Q` (`L × N`), so `S Sᴴ = L·I`.
pub fn orthogonal_waveform(n: usize, l: usize, rng: &mut impl Rng) -> CM {
    assert!(l >= n, "need L >= N for S Sᴴ = L·I");
    let q = random_cmat(l, n, rng).qr().q();
    q.adjoint() * C::new((l as f64).sqrt(), 0.0)
}

/// `F = (2/σ²) Re{Jᴴ J}` with explicit columns `J_i = vec(∂G/∂ξ_i · W S)`.
pub fn brute_force_fim(partials: &[CM], w: &CM, s: &CM, sigma2: f64) -> RM {
    let x = w * s;
    let cols: Vec<CM> = partials.iter().map(|d| d * &x).collect();
    let rows = cols[0].len();
    let jac = CM::from_fn(rows, cols.len(), |r, c| cols[c][r]);
    (jac.adjoint() * jac).map(|z| 2.0 * z.re / sigma2)
}

/// Random PSM target with `T` scatterers and distinct complex gains.
pub fn random_target(t: usize, rng: &mut impl Rng) -> TargetParams {
    let theta0 = rng.random_range(-0.8..0.8);
    let delta = rng.random_range(0.03..0.3);
    let alpha = (0..t).map(|_| cn(rng) + C::new(0.3, 0.0)).collect();
    TargetParams::new(theta0, delta, alpha).unwrap()
}

/// Design inputs for trial `trial` of `cfg`, channel draw identical to the
/// experiment runner's.
pub fn inputs_for(cfg: &ExperimentConfig, trial: usize) -> DesignInputs {
    let angles = draw_user_angles(
        cfg.n_users,
        cfg.user_angle_limit_deg.to_radians(),
        cfg.excluded_sector(),
        cfg.seed,
    )
    .unwrap();
    let ch = generate_channels_stream(
        cfg.n_users,
        cfg.n_tx,
        cfg.rician_kappa,
        &angles,
        cfg.seed,
        trial_stream(trial),
    )
    .unwrap();
    DesignInputs {
        channels: ch.h,
        gamma: cfg.gamma(),
        power: db_to_linear(cfg.power_dbm),
        sigma2_k: vec![db_to_linear(cfg.sigma2_k_dbm); cfg.n_users],
        target_prior: cfg.target().unwrap(),
        noise: cfg.noise().unwrap(),
    }
}
