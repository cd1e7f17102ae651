//! Time integration of the full system and bit-exact state persistence.
//!
//! The evolution equations, with `P` the Leray projection and `j = curl b`:
//!
//! ```text
//! u_t = P(-u.grad u + b.grad b) + nu Lap u
//! b_t = -u.grad b + b.grad u - eta curl(j x b) + mu Lap b
//! ```
//!
//! Diffusion is integrated exactly through per-mode integrating factors;
//! the projected nonlinear terms go through an explicit midpoint rule at a
//! CFL-limited step. [`rhs`] evaluates the nonlinear tendencies with fused
//! packed transforms, [`evolve`] marches a state to a horizon, and
//! [`snapshot`] persists states losslessly.

mod rhs;
pub mod snapshot;
mod stepper;

pub use rhs::{rhs, RhsStats};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
pub use stepper::{
    compute_dt, evolve, pair_energy, EvolveReport, Scheme, SolverState, StepInfo, Stepper,
    StepperConfig,
};
