//! Sanity check of the LAPACK the conic solver links against.
//!
//! Some OpenBLAS builds select kernels at load time and a few of those
//! return wrong triangular solves for matrices of order 32 and above, which
//! makes every PSD cone of that size fail inside the solver. OpenBLAS reads
//! `OPENBLAS_CORETYPE` only when it loads, so a process that finds the check
//! failing has to restart itself with the variable set.

use std::os::raw::{c_char, c_int};

extern "C" {
    fn dpotrf_(
        uplo: *const c_char,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        info: *mut c_int,
    );
}

/// Environment variable OpenBLAS consults for its kernel family.
pub const CORETYPE_VAR: &str = "OPENBLAS_CORETYPE";

/// Kernel family known to factor correctly on any AVX2 machine.
pub const SAFE_CORETYPE: &str = "Haswell";

/// Cholesky-factors a well-conditioned order-48 matrix and checks `L Lᵀ`.
pub fn cholesky_ok() -> bool {
    const N: usize = 48;
    let mut a = vec![0.0; N * N];
    for i in 0..N {
        for j in 0..N {
            // Diagonally dominant with structure in every entry.
            a[i + j * N] = if i == j {
                N as f64 + 1.0
            } else {
                1.0 / (1.0 + (i + j) as f64)
            };
        }
    }
    let orig = a.clone();
    let (n, lda, mut info) = (N as c_int, N as c_int, 0 as c_int);
    let uplo = b'L' as c_char;
    // SAFETY: `a` holds N*N doubles in column-major order with lda = N.
    unsafe { dpotrf_(&uplo, &n, a.as_mut_ptr(), &lda, &mut info) };
    if info != 0 {
        return false;
    }
    let l = |i: usize, j: usize| if i >= j { a[i + j * N] } else { 0.0 };
    let mut err: f64 = 0.0;
    for i in 0..N {
        for j in 0..=i {
            let s: f64 = (0..=j).map(|k| l(i, k) * l(j, k)).sum();
            err = err.max((s - orig[i + j * N]).abs());
        }
    }
    err <= 1e-10 * N as f64
}
