//! Run diagnostics: perturbation energies and forcing aggregates per
//! sample, exact cancellation identities of the energy budget, the
//! differential energy inequality with its fitted constant, and the
//! derivative-of-product commutator bound.

mod cancellation;
mod commutator;
mod master;
mod sample;

pub use cancellation::{
    cancellation_checks, hall_energy_residual, pressure_consistency, CancellationResiduals,
    IdentityWorkspace, PressureCheck,
};
pub use commutator::{commutator_test, prolong, prolong_scalar, CommutatorReport};
pub use master::{
    bootstrap_check, fit_minimal_c, master_inequality_residuals, BootstrapVerdict, MasterFit,
};
pub use sample::{energy_sample, forcing_aggregates, perturbations, PerturbationSample};

#[cfg(test)]
pub(crate) mod test_support {
    use crate::data::{build_beltrami_seed, build_cutoff, ModelParams, RadialProfile};
    use crate::reference::ReferenceFlow;
    use crate::spectral::Grid;

    /// Small reference flow for monitor tests: seeded Beltrami data plus
    /// the default cutoff on an `n`-point grid.
    pub fn reference_flow(n: usize, params: ModelParams) -> ReferenceFlow {
        let grid = Grid::new(n, params.period()).unwrap();
        let seed = build_beltrami_seed(&params, &grid, RadialProfile::SmoothBump, 7).unwrap();
        let cutoff = build_cutoff(&grid, params.m0).unwrap();
        ReferenceFlow::new(params, &seed, cutoff).unwrap()
    }
}
