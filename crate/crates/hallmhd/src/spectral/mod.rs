//! Grid, transforms, and Fourier-side calculus.
//!
//! Everything downstream works on flat row-major lattices indexed
//! `(i*n + j)*n + k` with axis order `(x, y, z)`; `k` is the fastest index.

mod fft;
mod field;
mod grid;
pub mod ops;

pub use field::{ScalarField, VectorField};
pub use grid::Grid;

pub(crate) use field::{
    forward_into, forward_packed, forward_packed_masked, inverse_into, inverse_packed,
    inverse_packed_masked,
};
