//! Dense complex linear algebra helpers shared by the simulator modules.
//!
//! Basis-state indexing: qubit `q` is bit `q` of the computational basis
//! index, so qubit 0 is the least significant bit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type Matrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn dim_for(qubits: usize) -> usize {
    1usize << qubits
}

/// Returns `Some(n)` when `dim == 2^n`.
pub fn qubits_for(dim: usize) -> Option<usize> {
    (dim.is_power_of_two() && dim > 0).then(|| dim.trailing_zeros() as usize)
}

pub fn basis_state(dim: usize, index: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn density(psi: &StateVector) -> Matrix {
    psi * psi.adjoint()
}

pub fn trace(m: &Matrix) -> C64 {
    m.diagonal().sum()
}

pub fn hermitian_defect(m: &Matrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_unitary(u: &Matrix, tol: f64) -> bool {
    u.is_square() && {
        let prod = u.adjoint() * u;
        (prod - Matrix::identity(u.nrows(), u.nrows()))
            .iter()
            .all(|z| z.norm() <= tol)
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &Matrix) -> Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// `a ⊗ b`, with `b` acting on the low-order qubits.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Max-abs distance between `a` and `b` after removing the global phase of `b`
/// relative to `a`.
pub fn phase_insensitive_distance(a: &Matrix, b: &Matrix) -> f64 {
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    (a - b * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with the R-diagonal phases fixed).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = gaussian_matrix(dim, 1, rng).column(0).into_owned();
    let norm = v.norm();
    v.unscale(norm)
}

/// Random full-rank mixed state from the induced (Ginibre) measure.
pub fn random_mixed_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let g = gaussian_matrix(dim, dim, rng);
    let rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    rho.unscale(tr)
}

/// `m^{-1/2}` for a Hermitian positive-definite matrix.
pub(crate) fn inverse_sqrt_hermitian(m: &Matrix) -> Matrix {
    let eig = m.clone().symmetric_eigen();
    let dim = m.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..dim {
        let s = 1.0 / eig.eigenvalues[j].sqrt();
        for i in 0..dim {
            scaled[(i, j)] *= s;
        }
    }
    scaled * eig.eigenvectors.adjoint()
}
