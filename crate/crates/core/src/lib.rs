//! Blind source separation for spectral datasets with negative intensity.
//!
//! The crate is organised bottom-up:
//!
//! * [`numkernel`] – dense linear algebra, NNLS, Nelder–Mead, Jacobi joint
//!   diagonalisation, rectangular assignment and a seedable generator.
//! * [`lineshape`] – second-order quadrupolar MAS powder lineshapes and the
//!   pure-component library.
//! * [`synth`] – inversion-recovery / nutation mixture datasets.
//! * [`bss`] – the separation techniques.
//! * [`scoring`] – affine lack-of-fit and one-to-one component matching.
//! * [`bench`] – experiment grid orchestration and summary tables.
//! * [`io`] – on-disk JSON formats.

pub mod bench;
pub mod bss;
pub mod error;
pub mod io;
pub mod lineshape;
pub mod numkernel;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
pub use numkernel::Matrix;
