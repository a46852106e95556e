//! Solver-neutral description of a real conic program whose variables are
//! Hermitian or symmetric matrices.
//!
//! Each matrix variable is flattened into real coordinates. Constraints are
//! linear inequalities in those coordinates and linear matrix inequalities
//! `M(x) = C + Σ_v x_v M_v ⪰ 0` with real symmetric `M_v`. Complex Hermitian
//! LMIs enter through the real embedding `[[Re X, −Im X], [Im X, Re X]]`.

use num_complex::Complex64;

use crate::linalg::{CMat, RMat};
use crate::target::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Hermitian,
    Symmetric,
}

/// One real coordinate of a matrix variable. Off-diagonal coordinates use
/// `r < c`: `Re(r, c)` sets `X_rc = X_cr = x`, `Im(r, c)` sets
/// `X_rc = j·y`, `X_cr = −j·y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

#[derive(Debug, Clone)]
pub struct MatrixVar {
    pub name: String,
    pub kind: VarKind,
    pub n: usize,
    /// Index of the first coordinate in the global vector.
    pub offset: usize,
}

impl MatrixVar {
    pub fn len(&self) -> usize {
        match self.kind {
            VarKind::Hermitian => self.n * self.n,
            VarKind::Symmetric => self.n * (self.n + 1) / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Global index of a coordinate.
    pub fn index(&self, coord: Coord) -> usize {
        let local = match (self.kind, coord) {
            (VarKind::Hermitian, Coord::Diag(c)) => c * c + 2 * c,
            (VarKind::Hermitian, Coord::Re(r, c)) => c * c + 2 * r,
            (VarKind::Hermitian, Coord::Im(r, c)) => c * c + 2 * r + 1,
            (VarKind::Symmetric, Coord::Diag(c)) => c * (c + 1) / 2 + c,
            (VarKind::Symmetric, Coord::Re(r, c)) => c * (c + 1) / 2 + r,
            (VarKind::Symmetric, Coord::Im(..)) => {
                panic!("symmetric variables have no imaginary part")
            }
        };
        self.offset + local
    }

    /// All coordinates in storage order.
    pub fn coords(&self) -> Vec<Coord> {
        let mut out = Vec::with_capacity(self.len());
        for c in 0..self.n {
            for r in 0..c {
                out.push(Coord::Re(r, c));
                if self.kind == VarKind::Hermitian {
                    out.push(Coord::Im(r, c));
                }
            }
            out.push(Coord::Diag(c));
        }
        out
    }

    pub fn hermitian_value(&self, x: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for coord in self.coords() {
            let v = x[self.index(coord)];
            match coord {
                Coord::Diag(a) => m[(a, a)] += Complex64::new(v, 0.0),
                Coord::Re(r, c) => {
                    m[(r, c)] += Complex64::new(v, 0.0);
                    m[(c, r)] += Complex64::new(v, 0.0);
                }
                Coord::Im(r, c) => {
                    m[(r, c)] += Complex64::new(0.0, v);
                    m[(c, r)] -= Complex64::new(0.0, v);
                }
            }
        }
        m
    }

    pub fn symmetric_value(&self, x: &[f64]) -> RMat {
        self.hermitian_value(x).map(|z| z.re)
    }

    /// Writes the coordinates of a Hermitian matrix into `x`.
    pub fn write(&self, m: &CMat, x: &mut [f64]) {
        for coord in self.coords() {
            x[self.index(coord)] = match coord {
                Coord::Diag(a) => m[(a, a)].re,
                Coord::Re(r, c) => m[(r, c)].re,
                Coord::Im(r, c) => m[(r, c)].im,
            };
        }
    }
}

/// Sparse real symmetric affine matrix function stored by its upper
/// triangle: `(row, col, value)` with `row ≤ col` means both mirrored entries.
#[derive(Debug, Clone)]
pub struct Lmi {
    pub name: String,
    pub size: usize,
    pub constant: Vec<(usize, usize, f64)>,
    /// `(coordinate, row, col, value)`
    pub terms: Vec<(usize, usize, usize, f64)>,
}

impl Lmi {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
            constant: Vec::new(),
            terms: Vec::new(),
        }
    }

    pub fn value(&self, x: &[f64]) -> RMat {
        let mut m = RMat::zeros(self.size, self.size);
        let mut put = |r: usize, c: usize, v: f64| {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        };
        for &(r, c, v) in &self.constant {
            put(r, c, v);
        }
        for &(k, r, c, v) in &self.terms {
            put(r, c, v * x[k]);
        }
        m
    }

    /// Adds a real symmetric variable as the diagonal block starting at `at`.
    pub fn add_symmetric(&mut self, var: &MatrixVar, at: usize, scale: f64) {
        for coord in var.coords() {
            let (r, c) = match coord {
                Coord::Diag(a) => (a, a),
                Coord::Re(r, c) => (r, c),
                Coord::Im(..) => unreachable!(),
            };
            self.terms.push((var.index(coord), at + r, at + c, scale));
        }
    }

    /// Adds a Hermitian variable as the diagonal block starting at `at` of a
    /// complex Hermitian matrix of size `m`, embedded into this `2m` LMI.
    pub fn add_hermitian_embedded(&mut self, var: &MatrixVar, at: usize, m: usize, scale: f64) {
        debug_assert_eq!(self.size, 2 * m);
        for coord in var.coords() {
            let k = var.index(coord);
            let (r, c, z) = match coord {
                Coord::Diag(a) => (at + a, at + a, Complex64::new(scale, 0.0)),
                Coord::Re(r, c) => (at + r, at + c, Complex64::new(scale, 0.0)),
                Coord::Im(r, c) => (at + r, at + c, Complex64::new(0.0, scale)),
            };
            for (row, col, v) in embed_entry(m, r, c, z) {
                self.terms.push((k, row, col, v));
            }
        }
    }

    /// Adds a constant complex entry `(r ≤ c)` of an embedded Hermitian matrix.
    pub fn add_constant_embedded(&mut self, m: usize, r: usize, c: usize, z: Complex64) {
        self.constant.extend(embed_entry(m, r, c, z));
    }
}

/// Upper-triangle entries of the real embedding produced by the complex
/// Hermitian entry `X_rc = z` (`r ≤ c`, with `X_cr = conj z`).
fn embed_entry(m: usize, r: usize, c: usize, z: Complex64) -> Vec<(usize, usize, f64)> {
    if r == c {
        vec![(r, r, z.re), (r + m, r + m, z.re)]
    } else {
        let mut v = vec![(r, c, z.re), (r + m, c + m, z.re)];
        if z.im != 0.0 {
            v.push((r, c + m, -z.im));
            v.push((c, r + m, z.im));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `a·x ≥ rhs`
    Ge,
    /// `a·x ≤ rhs`
    Le,
}

#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(k, a)| a * x[k]).sum()
    }

    /// Signed violation, positive when the constraint is broken.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self.sense {
            Sense::Ge => self.rhs - self.lhs(x),
            Sense::Le => self.lhs(x) - self.rhs,
        }
    }
}

/// A CRB-minimization SDP ready for a conic solver.
///
/// Covariance variables are normalized by the power budget: the solver
/// works with `R̂ = R / covariance_scale` (the budget `P` when positive), so
/// `Tr{R̂_w} ≤ 1`. The FIM LMI holds `Cᵀ F C` for the invertible
/// `fim_congruence` `C`; the objective in physical units is
/// `objective_scale · cᵀx`.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub model: ModelKind,
    pub vars: Vec<MatrixVar>,
    pub n_coords: usize,
    pub objective: Vec<(usize, f64)>,
    pub objective_scale: f64,
    pub covariance_scale: f64,
    pub lmis: Vec<Lmi>,
    pub linear: Vec<LinearConstraint>,
    /// Index into `vars` of `R̂_w`.
    pub r_w: usize,
    /// Indices into `vars` of `R̂_k`.
    pub r_k: Vec<usize>,
    /// Size of the angle block (`J`, `U`); `N_t` for the unstructured model.
    pub n_angles: usize,
    /// Index into `lmis` of the Schur-complement FIM constraint, if any.
    pub fim_lmi: Option<usize>,
    /// Empty without a FIM LMI.
    pub fim_congruence: RMat,
    /// Set when infeasibility is evident before solving; the solver is then
    /// skipped. Interior point methods stall on such degenerate instances.
    pub infeasible: Option<String>,
}

impl ConicProblem {
    pub fn var(&self, name: &str) -> Option<&MatrixVar> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_scale * self.objective.iter().map(|&(k, c)| c * x[k]).sum::<f64>()
    }

    /// Sizes of the matrix variables in declaration order.
    pub fn var_sizes(&self) -> Vec<(VarKind, usize)> {
        self.vars.iter().map(|v| (v.kind, v.n)).collect()
    }

    pub fn lmi_sizes(&self) -> Vec<usize> {
        self.lmis.iter().map(|l| l.size).collect()
    }

    /// Evaluates the FIM encoded in the Schur LMI at a physical `R_w`, with
    /// `J = 0`, undoing the internal scaling.
    pub fn fim_at(&self, r_w: &CMat) -> Option<RMat> {
        let lmi = &self.lmis[self.fim_lmi?];
        let mut x = vec![0.0; self.n_coords];
        self.vars[self.r_w].write(&(r_w / Complex64::new(self.covariance_scale, 0.0)), &mut x);
        let scaled = lmi.value(&x);
        let inv = self.fim_congruence.clone().try_inverse()?;
        Some(inv.transpose() * scaled * inv)
    }
}

pub(crate) struct ProblemBuilder {
    pub vars: Vec<MatrixVar>,
    pub n_coords: usize,
    pub lmis: Vec<Lmi>,
    pub linear: Vec<LinearConstraint>,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self {
            vars: Vec::new(),
            n_coords: 0,
            lmis: Vec::new(),
            linear: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, n: usize) -> usize {
        let var = MatrixVar {
            name: name.into(),
            kind,
            n,
            offset: self.n_coords,
        };
        self.n_coords += var.len();
        self.vars.push(var);
        self.vars.len() - 1
    }
}
