mod common;

use common::*;
use isac_crb::experiment::ExperimentConfig;
use isac_crb::fisher::crb_target_coordinates;
use isac_crb::sdp::{design, SolverOptions, SolverStatus};
use isac_crb::{ArrayConfig, ModelKind, NoiseAndDwell, TargetParams};

/// `R_w = P (c v₁v₁ᴴ + (1−c) v₂v₂ᴴ)` with `v_i` unit beams steered at `φ_i`.
fn two_beam(phi1: f64, phi2: f64, c: f64, n: usize, p: f64) -> CM {
    let v1 = steer(phi1, n, 0.5).map(|z| z.conj()) / C::new((n as f64).sqrt(), 0.0);
    let v2 = steer(phi2, n, 0.5).map(|z| z.conj()) / C::new((n as f64).sqrt(), 0.0);
    (&v1 * v1.adjoint() * C::new(c * p, 0.0)) + (&v2 * v2.adjoint() * C::new((1.0 - c) * p, 0.0))
}

#[test]
fn sensing_only_optimum_matches_grid_search() {
    let arrays = ArrayConfig::ula(4, 4).unwrap();
    let noise = NoiseAndDwell::new(1.0, 10).unwrap();
    let xi = TargetParams::uniform(20f64.to_radians(), 8f64.to_radians(), 2, 0.1).unwrap();
    let p = 10.0;
    let inputs = isac_crb::sdp::DesignInputs {
        channels: CM::zeros(0, 4),
        gamma: vec![],
        power: p,
        sigma2_k: vec![],
        target_prior: xi.clone(),
        noise,
    };
    let out = design(ModelKind::Psm, &inputs, &arrays, &SolverOptions::default()).unwrap();
    assert_eq!(out.status, SolverStatus::Optimal);
    let sdp = out.beamformer.unwrap().crb_achieved.unwrap().crb_trace;

    let crb = |r: &CM| {
        crb_target_coordinates(ModelKind::Psm, &xi, r, &noise, &arrays)
            .map_or(f64::INFINITY, |c| c.crb_trace)
    };
    // Coarse grid over two steered beams and their power split.
    let grid: Vec<f64> = (-18..=18)
        .map(|d| (5.0 * d as f64).to_radians() * 0.999)
        .collect();
    let mut start = (f64::INFINITY, 0.0, 0.0, 0.0);
    for (i, &a) in grid.iter().enumerate() {
        for &b in &grid[i..] {
            for step in 0..=10 {
                let c = step as f64 / 10.0;
                let v = crb(&two_beam(a, b, c, 4, p));
                if v < start.0 {
                    start = (v, a, b, c);
                }
            }
        }
    }
    // Pattern search over a full factor `R_w = P·V Vᴴ / ‖V‖²` from the best grid point.
    let (_, a, b, c) = start;
    let eig = two_beam(a, b, c, 4, p).symmetric_eigen();
    let mut v: Vec<f64> = Vec::new();
    for col in 0..4 {
        let s = eig.eigenvalues[col].max(1e-3).sqrt();
        for row in 0..4 {
            let z = eig.eigenvectors[(row, col)] * s;
            v.extend([z.re, z.im]);
        }
    }
    let eval = |v: &[f64]| {
        let m = CM::from_fn(4, 4, |r, c| {
            C::new(v[2 * (4 * c + r)], v[2 * (4 * c + r) + 1])
        });
        let r = &m * m.adjoint();
        let t = r.trace().re;
        crb(&(r * C::new(p / t, 0.0)))
    };
    let mut best = eval(&v);
    let mut h = 0.5;
    while h > 1e-5 {
        let mut improved = false;
        for i in 0..v.len() {
            for sign in [1.0, -1.0] {
                let mut trial = v.clone();
                trial[i] += sign * h;
                let f = eval(&trial);
                if f < best {
                    best = f;
                    v = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    eprintln!("sdp {sdp:.6e} grid start {:.6e} search {best:.6e}", start.0);
    assert!(
        sdp <= best * (1.0 + 1e-6),
        "relaxation above a feasible point: {sdp} > {best}"
    );
    assert!(best <= 1.05 * sdp, "search {best} not within 5% of {sdp}");
}

fn desk_inputs(trial: usize) -> isac_crb::sdp::DesignInputs {
    inputs_for(&ExperimentConfig::desk(), trial)
}

fn objective(model: ModelKind, inputs: &isac_crb::sdp::DesignInputs, arrays: &ArrayConfig) -> f64 {
    let out = design(model, inputs, arrays, &SolverOptions::default()).unwrap();
    assert_eq!(
        out.status,
        SolverStatus::Optimal,
        "{model}: {}",
        out.relaxed.diagnostics
    );
    out.relaxed.objective_value
}

#[test]
fn vanishing_sinr_targets_recover_sensing_only_design() {
    let cfg = ExperimentConfig::desk();
    let arrays = cfg.arrays().unwrap();
    let mut loose = desk_inputs(0);
    // Small enough that the sensing-only optimum already satisfies every user.
    loose.gamma = vec![1e-3; loose.gamma.len()];
    let mut alone = loose.clone();
    sensing_only(&mut alone);
    for model in [ModelKind::Psm, ModelKind::Ucm] {
        let a = objective(model, &loose, &arrays);
        let b = objective(model, &alone, &arrays);
        assert!((a - b).abs() <= 1e-5 * b, "{model}: {a} vs {b}");
    }
}

fn sensing_only(inputs: &mut isac_crb::sdp::DesignInputs) {
    inputs.channels = CM::zeros(0, inputs.channels.ncols());
    inputs.gamma.clear();
    inputs.sigma2_k.clear();
}

#[test]
fn unstructured_sensing_only_closed_form_and_power_scaling() {
    let mut inputs = desk_inputs(0);
    sensing_only(&mut inputs);
    let arrays8 = ArrayConfig::ula(8, 12).unwrap();
    let p = inputs.power;
    let at_p = objective(ModelKind::Ucm, &inputs, &arrays8);
    assert!((at_p - 64.0 / p).abs() <= 1e-6 * at_p, "{at_p}");
    inputs.power *= 2.0;
    let at_2p = objective(ModelKind::Ucm, &inputs, &arrays8);
    assert!(
        (at_2p - 0.5 * at_p).abs() <= 1e-6 * at_p,
        "{at_2p} vs {at_p}"
    );
}

#[test]
fn one_strong_user_with_tiny_target_barely_moves_unstructured_optimum() {
    let arrays = ArrayConfig::ula(8, 12).unwrap();
    let mut inputs = desk_inputs(0);
    inputs.channels = inputs.channels.rows(0, 1).into_owned() * C::new(10.0, 0.0);
    inputs.gamma = vec![1e-3];
    inputs.sigma2_k = vec![1.0];
    let v = objective(ModelKind::Ucm, &inputs, &arrays);
    let closed = 64.0 / inputs.power;
    assert!((v - closed).abs() <= 0.01 * closed, "{v} vs {closed}");
}

#[test]
fn more_power_never_hurts() {
    let arrays = ExperimentConfig::desk().arrays().unwrap();
    let mut inputs = desk_inputs(1);
    for model in [ModelKind::Psm, ModelKind::Dsm] {
        inputs.power = 1000.0;
        let lo = objective(model, &inputs, &arrays);
        inputs.power = 2000.0;
        let hi = objective(model, &inputs, &arrays);
        assert!(hi <= lo * (1.0 + 1e-6), "{model}: {hi} > {lo}");
        assert!(hi < lo, "{model}: interior optimum should improve strictly");
    }
}

#[test]
fn two_scatterer_designs_both_solve() {
    let mut cfg = ExperimentConfig::desk();
    cfg.n_scatterers = 2;
    let arrays = cfg.arrays().unwrap();
    let inputs = inputs_for(&cfg, 0);
    for model in [ModelKind::Psm, ModelKind::Dsm] {
        let out = design(model, &inputs, &arrays, &SolverOptions::default()).unwrap();
        assert_eq!(out.status, SolverStatus::Optimal, "{model}");
        assert!(out.verification.unwrap().feasible());
    }
}

#[test]
fn zero_power_reported_infeasible_for_every_model() {
    let cfg = ExperimentConfig::desk();
    let arrays = cfg.arrays().unwrap();
    let mut inputs = inputs_for(&cfg, 0);
    inputs.power = 0.0;
    for model in ModelKind::ALL {
        let out = design(model, &inputs, &arrays, &SolverOptions::default()).unwrap();
        assert_eq!(out.status, SolverStatus::Infeasible, "{model}");
        assert!(out.beamformer.is_none());
    }
}

#[test]
fn unattainable_sinr_reported_infeasible() {
    let cfg = ExperimentConfig::desk();
    let arrays = cfg.arrays().unwrap();
    let mut inputs = inputs_for(&cfg, 0);
    inputs.power = 1e-3;
    let out = design(ModelKind::Psm, &inputs, &arrays, &SolverOptions::default()).unwrap();
    assert_eq!(
        out.status,
        SolverStatus::Infeasible,
        "{}",
        out.relaxed.diagnostics
    );
}
