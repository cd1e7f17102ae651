//! Norms and pseudo-spectral nonlinear products.
//!
//! Norm conventions: `L^2` carries the plain box measure (no `1/P^3`
//! normalization), so `||v||_{L^2}^2 = P^3 sum |c_m|^2` by Parseval. The
//! `H^m` family sums every multi-index derivative `|alpha| <= m` once.
//! Products are evaluated pointwise in real space and truncated back to
//! the 2/3 mask, which keeps quadratic products of masked fields
//! alias-free.

mod norms;
mod products;

pub use norms::{
    decay_weighted_sup, grad_sobolev_sq, gradient_order_sup, inner_l2, l1_fourier_norm, l2_norm,
    localized_sobolev_norm, multi_indices, multinomial, norm_report, sobolev_norm,
    sobolev_norm_scalar, sobolev_weight, w_inf_norm, NormReport,
};
pub use products::{advect, cross, hall_term, scalar_vector_product};
