//! Self-contained dense linear algebra for small symmetric problems.
//!
//! Everything here targets the desk scale of the solver (matrix dimensions
//! in the tens): cyclic Jacobi for symmetric eigenproblems, Hessenberg +
//! unshifted QR for general spectra, partial-pivot LU, and the Kronecker /
//! vectorization identities the constraint assembly relies on.

mod dense;
mod eig;
mod ops;

pub use dense::{DenseMatrix, LuFactor, SymMatrix};
pub use eig::{eigenvalues, sym_eig, SymEig};
pub use ops::{kron, lyapunov_solve, max_real_eig, min_eig, psd_project, unvec_mat, vec_mat};

use std::fmt;

/// Errors raised by the dense kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum LinAlgError {
    /// Input violated a precondition (shape mismatch, non-finite entries, ...).
    InvalidInput(String),
    /// An iterative kernel hit its iteration cap without converging.
    NumericFailure(String),
    /// A Lyapunov solve was requested for a non-Hurwitz closed loop.
    NotHurwitz { max_real_part: f64 },
    /// LU factorization met a zero pivot.
    Singular,
}

impl fmt::Display for LinAlgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Self::NumericFailure(msg) => write!(f, "numeric failure: {msg}"),
            Self::NotHurwitz { max_real_part } => {
                write!(f, "matrix is not Hurwitz (max Re(lambda) = {max_real_part:.3e})")
            }
            Self::Singular => write!(f, "matrix is singular to working precision"),
        }
    }
}

impl std::error::Error for LinAlgError {}
