//! Numerical primitives shared by the separation techniques and the scoring
//! pipeline. Everything here is deterministic given its inputs (and seed).

mod assign;
mod jointdiag;
mod linalg;
mod nelder_mead;
mod nnls;
mod rng;

pub use assign::{assign_max, Assignment};
pub use jointdiag::{joint_diagonalize, off_diagonal_energy, JointDiagonalization};
pub use linalg::{
    check_finite, frobenius, pinv, solve_spd_or_ridge, svd, sym_eig, Matrix, SvdResult, SymEig,
};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use nnls::{nnls, nnls_gram, NnlsResult};
pub use rng::{derive_seed, SeededRng};
