//! Dense complex linear algebra on the 12-dimensional fluctuation space.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

pub use num_complex::Complex64 as C64;

/// Number of mean-field variables.
pub const DIM: usize = 12;

pub type CMatrix = SMatrix<C64, DIM, DIM>;
pub type CVector = SVector<C64, DIM>;
pub type Mat3 = Matrix3<C64>;

/// Index of the conjugate partner of each state variable. Inversions are
/// their own partners.
pub const PARTNER: [usize; DIM] = [1, 0, 3, 2, 5, 4, 6, 7, 9, 8, 11, 10];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision")]
    Singular,
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The permutation matrix `P` swapping every variable with its conjugate.
pub fn partner_permutation() -> CMatrix {
    CMatrix::from_fn(|i, j| if PARTNER[i] == j { re(1.0) } else { re(0.0) })
}

/// `P · conj(m) · P`, computed by index relabelling.
pub fn conjugate_relabel(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(|i, j| m[(PARTNER[i], PARTNER[j])].conj())
}

/// `m · P`: column `j` of the result is column `PARTNER[j]` of `m`.
pub fn permute_columns(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(|i, j| m[(i, PARTNER[j])])
}

pub fn max_abs<const R: usize, const C: usize>(m: &SMatrix<C64, R, C>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn norm1(m: &CMatrix) -> f64 {
    (0..DIM).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse together with its 1-norm condition number.
pub fn inverse_with_condition(m: &CMatrix) -> Result<(CMatrix, f64), LinalgError> {
    let inv = m.lu().try_inverse().ok_or(LinalgError::Singular)?;
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() {
        return Err(LinalgError::Singular);
    }
    Ok((inv, cond))
}

/// All eigenvalues of a complex 12×12 matrix, from its complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Option<SVector<C64, DIM>> {
    m.schur().eigenvalues()
}

/// Smallest real part over the spectrum; `None` if the Schur iteration fails.
pub fn min_real_eigenvalue(m: &CMatrix) -> Option<f64> {
    eigenvalues(m).map(|ev| ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &CMatrix) -> Option<f64> {
    eigenvalues(m).map(|ev| ev.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Solves `A Σ + Σ A† = Q` through the Kronecker-product linear system
/// `(I ⊗ A + conj(A) ⊗ I) vec(Σ) = vec(Q)` (column-major `vec`).
pub fn solve_lyapunov(a: &CMatrix, q: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = DIM;
    let mut k = DMatrix::<C64>::zeros(n * n, n * n);
    // vec index of (i, j) is j * n + i
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for l in 0..n {
                // (I ⊗ A): Σ_l A[i,l] Σ[l,j]
                k[(row, j * n + l)] += a[(i, l)];
                // (conj(A) ⊗ I): Σ_l Σ[i,l] conj(A[j,l])
                k[(row, l * n + i)] += a[(j, l)].conj();
            }
        }
    }
    let rhs = DVector::from_iterator(n * n, q.iter().copied());
    let sol = k.lu().solve(&rhs).ok_or(LinalgError::Singular)?;
    Ok(CMatrix::from_iterator(sol.iter().copied()))
}

/// Solves a real dense linear system `m x = b`.
pub fn solve_real(m: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let rhs = DVector::from_column_slice(b);
    let x = m.lu().solve(&rhs).ok_or(LinalgError::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::Singular);
    }
    Ok(x.iter().copied().collect())
}

/// Commutator `[a, b]` of 3×3 operators.
#[inline]
pub fn commutator(a: &Mat3, b: &Mat3) -> Mat3 {
    a * b - b * a
}

/// Anticommutator `{a, b}` of 3×3 operators.
#[inline]
pub fn anticommutator(a: &Mat3, b: &Mat3) -> Mat3 {
    a * b + b * a
}

/// `|i⟩⟨j|` on the three-level space.
pub fn ket_bra(i: usize, j: usize) -> Mat3 {
    let mut m = Mat3::zeros();
    m[(i, j)] = re(1.0);
    m
}
