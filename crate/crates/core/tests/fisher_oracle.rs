mod common;

use common::*;
use isac_crb::fisher::{
    assemble_fim_dsm, assemble_fim_psm, assemble_fim_ucm, psm_labels, transform_fim,
    transform_fim_ucm,
};
use isac_crb::target::{jacobian_dsm, jacobian_ucm, DsmParams};
use isac_crb::{ArrayConfig, NoiseAndDwell};
use proptest::prelude::*;
use rand::Rng;

const N_TX: usize = 6;
const N_RX: usize = 8;
const T: usize = 3;

#[test]
fn psm_fim_matches_explicit_score_vectors() {
    let arrays = ArrayConfig::ula(N_TX, N_RX).unwrap();
    let mut rng = rng(11);
    for case in 0..10 {
        let l = N_TX + 2 + case;
        let sigma2 = rng.random_range(0.2..3.0);
        let noise = NoiseAndDwell::new(sigma2, l).unwrap();
        let xi = random_target(T, &mut rng);
        let (w, r) = random_covariance(N_TX, 10.0, &mut rng);
        let s = orthogonal_waveform(N_TX, l, &mut rng);
        let oracle = brute_force_fim(&psm_partials(&xi, &arrays), &w, &s, sigma2);
        let f = assemble_fim_psm(&xi, &r, &noise, &arrays).unwrap();
        let err = rel_fro(f.matrix(), &oracle);
        assert!(err <= 1e-8, "case {case}: relative error {err:.3e}");
    }
}

#[test]
fn dsm_fim_matches_explicit_score_vectors() {
    let arrays = ArrayConfig::ula(N_TX, N_RX).unwrap();
    let mut rng = rng(12);
    for case in 0..10 {
        let l = N_TX + 3;
        let noise = NoiseAndDwell::new(1.3, l).unwrap();
        let xi = random_target(T, &mut rng);
        let dsm = DsmParams::from_psm(&xi).unwrap();
        let (w, r) = random_covariance(N_TX, 4.0, &mut rng);
        let s = orthogonal_waveform(N_TX, l, &mut rng);
        let oracle = brute_force_fim(&dsm_partials(&dsm.thetas, &dsm.alpha, &arrays), &w, &s, 1.3);
        let f = assemble_fim_dsm(&dsm, &r, &noise, &arrays).unwrap();
        let err = rel_fro(f.matrix(), &oracle);
        assert!(err <= 1e-8, "case {case}: relative error {err:.3e}");
    }
}

#[test]
fn ucm_fim_matches_unit_perturbations() {
    let (nt, nr, l) = (3, 2, 5);
    let mut rng = rng(13);
    let (w, r) = random_covariance(nt, 2.0, &mut rng);
    let s = orthogonal_waveform(nt, l, &mut rng);
    let n = nt * nr;
    let unit = |k: usize, z: C| {
        let mut e = CM::zeros(nr, nt);
        e[(k % nr, k / nr)] = z;
        e
    };
    let mut partials: Vec<CM> = (0..n).map(|k| unit(k, C::new(1.0, 0.0))).collect();
    partials.extend((0..n).map(|k| unit(k, C::new(0.0, 1.0))));
    let oracle = brute_force_fim(&partials, &w, &s, 0.5);
    let f = assemble_fim_ucm(&r, nr, &NoiseAndDwell::new(0.5, l).unwrap()).unwrap();
    let err = rel_fro(f.real_embedding().unwrap().matrix(), &oracle);
    assert!(err <= 1e-10, "relative error {err:.3e}");
}

#[test]
fn all_chain_rules_agree_with_direct_fim() {
    let arrays = ArrayConfig::ula(N_TX, N_RX).unwrap();
    let noise = NoiseAndDwell::new(0.8, 20).unwrap();
    let mut rng = rng(14);
    let xi = random_target(T, &mut rng);
    let labels = psm_labels(T);
    for case in 0..5 {
        let (_, r) = random_covariance(N_TX, 7.0, &mut rng);
        let direct = assemble_fim_psm(&xi, &r, &noise, &arrays).unwrap();
        let dsm = DsmParams::from_psm(&xi).unwrap();
        let via_dsm = transform_fim(
            &assemble_fim_dsm(&dsm, &r, &noise, &arrays).unwrap(),
            &jacobian_dsm(&xi).unwrap(),
            labels.clone(),
        )
        .unwrap();
        let via_ucm = transform_fim_ucm(
            &assemble_fim_ucm(&r, N_RX, &noise).unwrap(),
            &jacobian_ucm(&xi, &arrays).unwrap(),
            labels.clone(),
        )
        .unwrap();
        let e1 = rel_fro(via_dsm.matrix(), direct.matrix());
        let e2 = rel_fro(via_ucm.matrix(), direct.matrix());
        assert!(
            e1 <= 1e-8 && e2 <= 1e-8,
            "case {case}: dsm {e1:.3e}, ucm {e2:.3e}"
        );
    }
}

#[test]
fn fim_doubles_with_dwell_and_halves_with_noise() {
    let arrays = ArrayConfig::ula(4, 5).unwrap();
    let mut rng = rng(15);
    let xi = random_target(T, &mut rng);
    let (_, r) = random_covariance(4, 1.0, &mut rng);
    let base = assemble_fim_psm(&xi, &r, &NoiseAndDwell::new(1.0, 10).unwrap(), &arrays).unwrap();
    let longer = assemble_fim_psm(&xi, &r, &NoiseAndDwell::new(1.0, 20).unwrap(), &arrays).unwrap();
    let noisier =
        assemble_fim_psm(&xi, &r, &NoiseAndDwell::new(2.0, 10).unwrap(), &arrays).unwrap();
    assert!(rel_fro(longer.matrix(), &(base.matrix() * 2.0)) < 1e-12);
    assert!(rel_fro(noisier.matrix(), &(base.matrix() * 0.5)) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psm_fim_is_linear_and_psd(seed in any::<u64>(), a in 0.1f64..5.0, b in 0.1f64..5.0) {
        let arrays = ArrayConfig::ula(4, 5).unwrap();
        let noise = NoiseAndDwell::new(1.0, 8).unwrap();
        let mut rng = rng(seed);
        let xi = random_target(T, &mut rng);
        let (_, r1) = random_covariance(4, 1.0, &mut rng);
        let (_, r2) = random_covariance(4, 1.0, &mut rng);
        let f = |r: &CM| assemble_fim_psm(&xi, r, &noise, &arrays).unwrap();
        let mixed = f(&(&r1 * C::new(a, 0.0) + &r2 * C::new(b, 0.0)));
        let expected = f(&r1).matrix() * a + f(&r2).matrix() * b;
        prop_assert!(rel_fro(mixed.matrix(), &expected) < 1e-10);
        prop_assert!(mixed.min_eigenvalue() >= -1e-9 * mixed.matrix().norm());
    }
}
