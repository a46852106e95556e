//! Uniform linear array response vectors.
//!
//! Element `m` of an `n`-element array with spacing `d` (in wavelengths)
//! responds to a plane wave from angle `θ` as `exp(j·2π·d·m·sin θ)`, with
//! the phase reference at element 0. Angles are in radians.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::CVec;

/// Transmit and receive array sizes and their common element spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl ArrayConfig {
    pub const HALF_WAVELENGTH: f64 = 0.5;

    pub fn new(n_tx: usize, n_rx: usize, spacing: f64) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(Error::InvalidParameter(format!(
                "array sizes must be positive (n_tx = {n_tx}, n_rx = {n_rx})"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            n_tx,
            n_rx,
            spacing,
        })
    }

    /// Half-wavelength ULAs.
    pub fn ula(n_tx: usize, n_rx: usize) -> Result<Self> {
        Self::new(n_tx, n_rx, Self::HALF_WAVELENGTH)
    }

    /// Transmit response `a(θ)`.
    pub fn tx(&self, theta: f64) -> CVec {
        steering(theta, self.n_tx, self.spacing)
    }

    /// Receive response `b(θ)`.
    pub fn rx(&self, theta: f64) -> CVec {
        steering(theta, self.n_rx, self.spacing)
    }

    pub fn tx_derivative(&self, theta: f64) -> CVec {
        steering_derivative(theta, self.n_tx, self.spacing)
    }

    pub fn rx_derivative(&self, theta: f64) -> CVec {
        steering_derivative(theta, self.n_rx, self.spacing)
    }
}

/// Steering vector of an `n`-element ULA.
pub fn steering(theta: f64, n: usize, spacing: f64) -> CVec {
    let k = 2.0 * PI * spacing * theta.sin();
    CVec::from_fn(n, |m, _| Complex64::from_polar(1.0, k * m as f64))
}

/// Exact derivative of [`steering`] with respect to `θ`.
pub fn steering_derivative(theta: f64, n: usize, spacing: f64) -> CVec {
    let k = 2.0 * PI * spacing * theta.sin();
    let dk = 2.0 * PI * spacing * theta.cos();
    CVec::from_fn(n, |m, _| {
        let m = m as f64;
        Complex64::new(0.0, dk * m) * Complex64::from_polar(1.0, k * m)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn broadside_is_all_ones() {
        let a = steering(0.0, 2, 0.5);
        assert!(a.iter().all(|&z| close(z, Complex64::new(1.0, 0.0))));
    }

    #[test]
    fn thirty_degrees_half_wavelength() {
        let a = steering(PI / 6.0, 4, 0.5);
        let expect = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        for (z, e) in a.iter().zip(expect) {
            assert!(close(*z, e), "{z} vs {e}");
        }
    }

    #[test]
    fn single_element() {
        assert_eq!(steering(0.77, 1, 0.5).len(), 1);
        assert!(close(steering(0.77, 1, 0.5)[0], Complex64::new(1.0, 0.0)));
        assert!(close(
            steering_derivative(0.3, 1, 0.9)[0],
            Complex64::new(0.0, 0.0)
        ));
    }

    #[test]
    fn derivative_at_broadside() {
        let d = steering_derivative(0.0, 2, 0.5);
        assert!(close(d[0], Complex64::new(0.0, 0.0)));
        assert!(close(d[1], Complex64::new(0.0, PI)));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let (theta, n, h) = (0.4, 6, 1e-6);
        let fd = (steering(theta + h, n, 0.5) - steering(theta - h, n, 0.5))
            / Complex64::new(2.0 * h, 0.0);
        let an = steering_derivative(theta, n, 0.5);
        let rel = (&fd - &an).norm() / an.norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn derivative_grid_against_central_difference() {
        let h = 1e-6;
        for n in [1usize, 2, 4, 8] {
            for i in 0..=28 {
                let theta = -1.4 + 0.1 * i as f64;
                let fd = (steering(theta + h, n, 0.5) - steering(theta - h, n, 0.5))
                    / Complex64::new(2.0 * h, 0.0);
                let an = steering_derivative(theta, n, 0.5);
                let max_el = an.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
                let err = (&fd - &an).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
                assert!(err <= 1e-5 * (1.0 + max_el), "n={n} θ={theta}: {err}");
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ArrayConfig::new(0, 4, 0.5).is_err());
        assert!(ArrayConfig::new(4, 0, 0.5).is_err());
        assert!(ArrayConfig::new(4, 4, 0.0).is_err());
        assert!(ArrayConfig::ula(4, 4).is_ok());
    }

    proptest! {
        #[test]
        fn unit_modulus_and_conjugate_symmetry(theta in -1.5f64..1.5, n in 1usize..32, s in 0.1f64..2.0) {
            let a = steering(theta, n, s);
            let b = steering(-theta, n, s);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x.norm() - 1.0).abs() < 1e-12);
                prop_assert!((x.conj() - y).norm() < 1e-12);
            }
        }
    }
}
