//! Rician user channels and downlink SINR.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::array::steering;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};

/// User channels `h_kᵀ` stacked as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: CMat,
    pub user_angles: Vec<f64>,
    pub rician_kappa: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Stream used for drawing user directions; trial `t` uses stream `t + 1`.
pub const USER_ANGLE_STREAM: u64 = 0;

pub fn trial_stream(trial: usize) -> u64 {
    trial as u64 + 1
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `h_k = √(κ/(1+κ)) a(φ_k) + √(1/(1+κ)) g_k` with `g_k ~ CN(0, I)` and a
/// half-wavelength array. `κ = ∞` gives the pure line-of-sight channel.
pub fn generate_channels(
    n_users: usize,
    n_tx: usize,
    kappa: f64,
    user_angles: &[f64],
    seed: u64,
) -> Result<ChannelSet> {
    generate_channels_stream(n_users, n_tx, kappa, user_angles, seed, 0)
}

/// [`generate_channels`] on an independent stream of the same seed.
pub fn generate_channels_stream(
    n_users: usize,
    n_tx: usize,
    kappa: f64,
    user_angles: &[f64],
    seed: u64,
    stream: u64,
) -> Result<ChannelSet> {
    if !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Rician factor must be non-negative, got {kappa}"
        )));
    }
    if user_angles.len() != n_users {
        return Err(Error::DimensionMismatch(format!(
            "{n_users} users but {} angles",
            user_angles.len()
        )));
    }
    if user_angles
        .iter()
        .any(|a| !(a.abs() < std::f64::consts::FRAC_PI_2))
    {
        return Err(Error::InvalidParameter(
            "user angle outside (-π/2, π/2)".into(),
        ));
    }
    let (los, nlos) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
    };
    let mut rng = rng_for(seed, stream);
    let mut h = CMat::zeros(n_users, n_tx);
    for (k, &phi) in user_angles.iter().enumerate() {
        let a = steering(phi, n_tx, 0.5);
        for m in 0..n_tx {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let g = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            h[(k, m)] = a[m] * los + g * nlos;
        }
    }
    Ok(ChannelSet {
        h,
        user_angles: user_angles.to_vec(),
        rician_kappa: kappa,
        seed,
        stream,
    })
}

/// Draws user directions uniformly on `(−limit, limit)` while avoiding the
/// `excluded` interval, from the dedicated user-angle stream of `seed`.
pub fn draw_user_angles(
    n_users: usize,
    limit: f64,
    excluded: Option<(f64, f64)>,
    seed: u64,
) -> Result<Vec<f64>> {
    if let Some((lo, hi)) = excluded {
        if lo <= -limit && hi >= limit {
            return Err(Error::InvalidParameter(
                "exclusion sector covers every user direction".into(),
            ));
        }
    }
    let mut rng = rng_for(seed, USER_ANGLE_STREAM);
    let mut out = Vec::with_capacity(n_users);
    while out.len() < n_users {
        let phi = rng.random_range(-limit..limit);
        if excluded.is_some_and(|(lo, hi)| phi >= lo && phi <= hi) {
            continue;
        }
        out.push(phi);
    }
    Ok(out)
}

/// SINR of user `k` when column `k` of `w` carries its stream and every
/// other column (other users and sensing beams) interferes.
pub fn sinr(w: &CMat, k: usize, h_k: &CVec, sigma2_k: f64) -> f64 {
    let gains: Vec<f64> = w
        .column_iter()
        .map(|col| {
            h_k.iter()
                .zip(col.iter())
                .map(|(h, x)| h * x)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect();
    let signal = gains.get(k).copied().unwrap_or(0.0);
    let interference: f64 = gains
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, g)| g)
        .sum();
    let den = interference + sigma2_k;
    if signal == 0.0 {
        0.0
    } else {
        signal / den
    }
}
