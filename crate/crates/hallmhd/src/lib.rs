//! Pseudo-spectral incompressible resistive Hall-MHD on the periodic box
//! `[0, P)^3`, together with the machinery needed to build Beltrami-type
//! large initial data, evolve it, and compare the evolution against exact
//! heat-flow reference fields.
//!
//! The crate is organized bottom-up:
//!
//! * [`spectral`] - grid, transforms, Fourier-side calculus (derivatives,
//!   Leray projection, 2/3-rule dealiasing),
//! * [`algebra`] - nonlinear products evaluated pseudo-spectrally and the
//!   norm family used by the diagnostics (Sobolev, localized Sobolev,
//!   `W^{k,inf}` grid surrogates, spectral `L^1`),
//! * [`data`] - cutoff function, helical basis, annulus-supported Beltrami
//!   seed, and assembly of the composite initial fields,
//! * [`reference`] - exact heat semigroup flows and the decay/forcing
//!   quantities measured against them,
//! * [`solver`] - integrating-factor midpoint stepper for the full system
//!   plus bit-exact binary snapshots ([`solver::snapshot`]),
//! * [`monitor`] - perturbation energies, cancellation identities, the
//!   master energy inequality fit, and the commutator inequality study.
//!
//! Coefficient convention: a field is stored as Fourier-series coefficients
//! `c_m` with `f(x) = sum_m c_m exp(i xi_m . x)` and `xi_m = 2 pi m / P`.
//! Real fields keep Hermitian symmetry `c_{-m} = conj(c_m)` at all times.

pub mod algebra;
pub mod data;
pub mod error;
pub mod monitor;
pub mod reference;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{Grid, ScalarField, VectorField};

/// Convenience re-export; all spectral data is `Complex<f64>`.
pub use rustfft::num_complex::Complex;
