//! Construction of the large Beltrami-type initial data: model
//! parameters, the helical mode basis, the smooth compact cutoff, the
//! annulus seed, and the final assembly into a divergence-free pair.

mod cutoff;
mod helical;
mod initial;
mod params;
mod seed;

pub use cutoff::{build_cutoff, Cutoff, CUTOFF_DERIVATIVE_SUPS};
pub use helical::helical_basis;
pub use initial::{assemble_initial_data, random_h3_field, SizeReport};
pub use params::ModelParams;
pub use seed::{build_beltrami_seed, verify_seed_properties, BeltramiSeed, RadialProfile, SeedReport};
