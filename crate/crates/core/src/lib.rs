//! modkg-core: spectral analysis toolkit for Klein-Gordon equations on
//! periodic grids.
//!
//! The crate provides, in dependency order:
//!
//! - [`grid`]: discrete fields, the unitary DFT, Fourier multipliers and
//!   Lebesgue quadrature norms;
//! - [`decomp`]: the frequency-uniform decomposition (unit-cube windows on
//!   the integer lattice) and dyadic Littlewood-Paley blocks;
//! - [`norms`]: modulation, Besov, Sobolev and mixed time-space norms;
//! - [`ops`]: Bessel and Riesz potentials, the Klein-Gordon propagators and
//!   the pointwise/nonlocal nonlinearities;
//! - [`solver`]: Picard iteration on the Duhamel integral plus a Lawson-RK4
//!   exponential integrator used as an independent oracle;
//! - [`admissible`]: exact-rational checks of well-posedness parameter
//!   conditions;
//! - [`verify`]: randomized-ensemble measurement of norm inequalities with
//!   decay/growth exponent fits.

pub mod admissible;
pub mod decomp;
pub mod error;
mod fft;
pub mod grid;
pub mod norms;
pub mod ops;
pub mod solver;
pub mod sum;
pub mod verify;

#[doc(hidden)]
pub mod testutil;

pub use decomp::{build_windows, ModulationDecomposition, SpectralPatch, WindowFamily};
pub use error::{ModkgError, Result};
pub use grid::{
    apply_multiplier, conjugate_exponent, forward_transform, inverse_transform, lp_norm,
    read_mkgf, write_field_csv, write_mkgf, Field, GridSpec, SpectralField,
};
pub use norms::{
    besov_norm, modulation_norm, sobolev_norm, timespace_norm, NormOrder, SpaceParams,
    TimeSpaceParams,
};
pub use num_complex::Complex64;
