//! Exact diffusion reference flows and the measured decay and product
//! quantities compared against their parameter envelopes.

mod decay;
mod flow;

pub use decay::{
    cross_decay_integral, decay_check, fitted_decay_rate, reference_quantities,
    CrossDecayIntegral, DecayReport, ReferenceQuantities,
};
pub use flow::{heat_flow, ReferenceFlow, ReferenceState};
