//! Small dense complex linear algebra on top of `nalgebra`.
//!
//! Every matrix handled here is tiny (at most 8x8 in practice). Exponentials of
//! Hermitian and anti-Hermitian generators go through the Hermitian eigensolver
//! so that the results are unitary to rounding error.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus of `m - m†`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Largest entry modulus of `m + m†`.
pub fn anti_hermitian_defect(m: &CMatrix) -> f64 {
    max_abs(&(m + m.adjoint()))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `(m - m†) / 2`
pub fn anti_hermitian_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * C64::new(0.5, 0.0)
}

/// `(m + m†) / 2`
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the lower triangle is trusted by the solver, so the input is
/// symmetrized first.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `exp(-i s h)` for Hermitian `h`.
pub fn exp_hermitian(h: &CMatrix, s: f64) -> CMatrix {
    let (values, vectors) = eigh(h);
    let phases = CVector::from_iterator(values.len(), values.iter().map(|&l| C64::from_polar(1.0, -s * l)));
    &vectors * CMatrix::from_diagonal(&phases) * vectors.adjoint()
}

/// `exp(a)` for anti-Hermitian `a`.
pub fn exp_anti_hermitian(a: &CMatrix) -> CMatrix {
    if a.nrows() == 1 {
        return CMatrix::from_element(1, 1, C64::from_polar(1.0, a[(0, 0)].im));
    }
    // a = -i h with h = i a Hermitian, so exp(a) = exp(-i h).
    exp_hermitian(&(a * I), 1.0)
}

/// Unitary factor `Q` of the polar decomposition `m = Q P`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    if m.nrows() == 1 && m.ncols() == 1 {
        let z = m[(0, 0)];
        let r = z.norm();
        let u = if r > 0.0 { z / r } else { C64::new(1.0, 0.0) };
        return CMatrix::from_element(1, 1, u);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn min_singular_value(m: &CMatrix) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Distance from unitarity, `max |U†U - 1|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Pick a rotation `e^{-i psi}` that keeps every eigenvalue of `u` away from -1,
/// then diagonalize through the Cayley transform `i (1 - V)(1 + V)^{-1}`, which
/// is Hermitian with eigenvalues `tan(phi / 2)`.
fn cayley_eigen(u: &CMatrix) -> (f64, Vec<f64>, CMatrix) {
    let n = u.nrows();
    let id = CMatrix::identity(n, n);
    let mut best = (0.0, -1.0);
    for k in 0..16 {
        let psi = 2.0 * PI * k as f64 / 16.0;
        let v = u * C64::from_polar(1.0, -psi);
        let s = min_singular_value(&(&id + &v));
        if s > best.1 {
            best = (psi, s);
        }
        if s > 1.0 {
            break;
        }
    }
    let psi = best.0;
    let v = u * C64::from_polar(1.0, -psi);
    let inv = (&id + &v).try_inverse().expect("shifted unitary is invertible");
    let cayley = (&id - &v) * inv * I;
    let (tau, vectors) = eigh(&cayley);
    let phases = tau.iter().map(|t| 2.0 * t.atan()).collect();
    (psi, phases, vectors)
}

/// Eigenphases of a unitary matrix in `(-pi, pi]`, ascending.
pub fn unitary_eigenphases(u: &CMatrix) -> Vec<f64> {
    if u.nrows() == 1 {
        return vec![u[(0, 0)].arg()];
    }
    let (psi, phases, _) = cayley_eigen(u);
    let mut out: Vec<f64> = phases.into_iter().map(|p| wrap_angle(p + psi)).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Principal logarithm of a unitary matrix (anti-Hermitian result).
pub fn log_unitary(u: &CMatrix) -> CMatrix {
    if u.nrows() == 1 {
        return CMatrix::from_element(1, 1, I * u[(0, 0)].arg());
    }
    let (psi, phases, vectors) = cayley_eigen(u);
    let diag = CVector::from_iterator(phases.len(), phases.iter().map(|&p| I * wrap_angle(p + psi)));
    &vectors * CMatrix::from_diagonal(&diag) * vectors.adjoint()
}

/// Commutator `[a, b]`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}
