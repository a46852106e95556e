//! Small dense linear-algebra helpers shared by the model, FIM and SDP code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

/// Column-major vectorization.
pub fn vec_cm(m: &CMat) -> CVec {
    DVector::from_column_slice(m.as_slice())
}

/// `‖M − Mᴴ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / norm
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn symmetric_eigenvalues(m: &RMat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Real trace of a complex matrix.
pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Rejects matrices that are not Hermitian to `1e-8` relative, or that have an
/// eigenvalue below `-1e-8 · tr`.
pub fn check_hermitian_psd(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > 1e-8 {
        return Err(Error::NotHermitian { asymmetry });
    }
    let ev = hermitian_eigenvalues(m);
    let min = ev.first().copied().unwrap_or(0.0);
    let scale = trace_re(m).abs();
    if min < -1e-8 * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// Condition number `|λ|max / |λ|min` of a real symmetric matrix.
/// Returns infinity for singular or empty input.
pub fn condition_number_sym(m: &RMat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let ev = symmetric_eigenvalues(m);
    let max = ev.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = ev.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Real symmetric embedding `[[Re X, −Im X], [Im X, Re X]]` of a Hermitian
/// matrix. `X ⪰ 0` iff the embedding is PSD.
pub fn real_embedding(m: &CMat) -> RMat {
    let n = m.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for c in 0..n {
        for r in 0..n {
            let z = m[(r, c)];
            out[(r, c)] = z.re;
            out[(r + n, c + n)] = z.re;
            out[(r + n, c)] = z.im;
            out[(r, c + n)] = -z.im;
        }
    }
    out
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(0.0_f64, |a, &v| a.max(v));
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&v| v > rel_tol * max).count()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}
