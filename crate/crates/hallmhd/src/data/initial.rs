//! Final assembly of the initial pair: a compactly supported copy of the
//! seed is added to small divergence-free backgrounds, with one Leray
//! projection restoring exact incompressibility after the cutoff.

use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rustfft::num_complex::Complex;
use serde::Serialize;

use crate::algebra::{l2_norm, scalar_vector_product, sobolev_norm, sobolev_norm_scalar, w_inf_norm};
use crate::data::cutoff::Cutoff;
use crate::data::params::ModelParams;
use crate::data::seed::BeltramiSeed;
use crate::error::{Error, Result};
use crate::spectral::ops::{curl, divergence, leray_project};
use crate::spectral::{Grid, VectorField};

type C64 = Complex<f64>;

/// Measured sizes of the assembled pair.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SizeReport {
    pub u_h3: f64,
    pub b_h3: f64,
    pub u_sup: f64,
    pub b_sup: f64,
    /// `||u01||_H3 + ||b01||_H3`, checked against the admissible budget.
    pub background_h3: f64,
    /// L2 distance between the truncated seed term and its projection.
    pub projection_correction_u: f64,
    pub projection_correction_b: f64,
    /// Worst relative divergence of the two assembled fields.
    pub divergence_residual: f64,
}

fn rel_divergence(v: &VectorField) -> f64 {
    sobolev_norm_scalar(&divergence(v), 0) / sobolev_norm(v, 1).max(1e-300)
}

/// Random divergence-free field with Fourier support in
/// `|m_axis| <= max_band` and H3 norm scaled to `target_h3` exactly.
/// Built as the curl of a random band-limited field, so incompressibility
/// holds to machine precision mode by mode.
pub fn random_h3_field(
    grid: &Arc<Grid>,
    max_band: i64,
    target_h3: f64,
    rng_seed: u64,
) -> Result<VectorField> {
    if max_band < 1 || max_band > grid.m_keep() {
        return Err(Error::InvalidParameter {
            name: "max_band",
            value: max_band as f64,
            constraint: "1 <= max_band <= mask radius",
        });
    }
    if !(target_h3 >= 0.0) || !target_h3.is_finite() {
        return Err(Error::InvalidParameter {
            name: "target_h3",
            value: target_h3,
            constraint: "finite and nonnegative",
        });
    }
    let mut out = VectorField::zeros(grid.clone());
    if target_h3 == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut raw = VectorField::zeros(grid.clone());
    for mi in 0..=max_band {
        for mj in -max_band..=max_band {
            for mk in -max_band..=max_band {
                // One representative per Hermitian pair.
                let first = if mi != 0 {
                    mi
                } else if mj != 0 {
                    mj
                } else {
                    mk
                };
                if first <= 0 {
                    continue;
                }
                let value = std::array::from_fn(|_| {
                    C64::new(2.0 * unit() - 1.0, 2.0 * unit() - 1.0)
                });
                raw.set_mode_pair([mi, mj, mk], value);
            }
        }
    }
    out = curl(&raw);
    let h3 = sobolev_norm(&out, 3);
    out.scale(target_h3 / h3);
    Ok(out)
}

/// Assemble `u0 = u01 + P(chi alpha1 v0)` and `b0 = b01 + P(chi alpha2 v0)`
/// where `v0` is the seed, `chi` the cutoff, and `P` the Leray projection.
pub fn assemble_initial_data(
    params: &ModelParams,
    seed: &BeltramiSeed,
    cutoff: &Cutoff,
    u01: &VectorField,
    b01: &VectorField,
) -> Result<(VectorField, VectorField, SizeReport)> {
    params.validate()?;
    let grid = seed.grid();
    grid.same_grid(cutoff.grid())?;
    grid.same_grid(u01.grid())?;
    grid.same_grid(b01.grid())?;

    let background_h3 = sobolev_norm(u01, 3) + sobolev_norm(b01, 3);
    let allowed = params.m0.powf(-0.5);
    if background_h3 > allowed * (1.0 + 1e-9) {
        return Err(Error::BackgroundTooLarge {
            measured: background_h3,
            allowed,
        });
    }
    for (name, f) in [("u01", u01), ("b01", b01)] {
        let rel = rel_divergence(f);
        if rel > 1e-12 {
            return Err(Error::InvalidParameter {
                name: if name == "u01" { "u01" } else { "b01" },
                value: rel,
                constraint: "background fields must be divergence-free",
            });
        }
    }

    let build = |alpha: f64, background: &VectorField| -> Result<(VectorField, f64)> {
        let mut scaled = seed.field().clone();
        scaled.scale(alpha);
        let truncated = scalar_vector_product(cutoff.samples(), &scaled, true);
        let projected = leray_project(&truncated);
        let correction = l2_norm(&truncated.diff(&projected)?);
        let mut out = background.clone();
        out.add_scaled(&projected, 1.0)?;
        Ok((out, correction))
    };
    let (u0, corr_u) = build(params.alpha1, u01)?;
    let (b0, corr_b) = build(params.alpha2, b01)?;

    let report = SizeReport {
        u_h3: sobolev_norm(&u0, 3),
        b_h3: sobolev_norm(&b0, 3),
        u_sup: w_inf_norm(&u0, 0),
        b_sup: w_inf_norm(&b0, 0),
        background_h3,
        projection_correction_u: corr_u,
        projection_correction_b: corr_b,
        divergence_residual: rel_divergence(&u0).max(rel_divergence(&b0)),
    };
    Ok((u0, b0, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cutoff::build_cutoff;
    use crate::data::seed::{build_beltrami_seed, RadialProfile};

    fn setup(n: usize, params: &ModelParams) -> (Arc<Grid>, BeltramiSeed, Cutoff) {
        let grid = Grid::new(n, params.period()).unwrap();
        let seed = build_beltrami_seed(params, &grid, RadialProfile::SmoothBump, 17).unwrap();
        let cutoff = build_cutoff(&grid, params.m0).unwrap();
        (grid, seed, cutoff)
    }

    #[test]
    fn zero_couplings_reproduce_the_backgrounds() {
        let params = ModelParams {
            alpha1: 0.0,
            alpha2: 0.0,
            ..ModelParams::default()
        };
        let (grid, seed, cutoff) = setup(64, &params);
        let u01 = random_h3_field(&grid, 3, 0.2, 100).unwrap();
        let b01 = random_h3_field(&grid, 3, 0.1, 101).unwrap();
        let (u0, b0, report) = assemble_initial_data(&params, &seed, &cutoff, &u01, &b01).unwrap();
        assert_eq!(u0.diff(&u01).unwrap().max_coeff(), 0.0);
        assert_eq!(b0.diff(&b01).unwrap().max_coeff(), 0.0);
        assert_eq!(report.projection_correction_u, 0.0);
    }

    #[test]
    fn zero_background_gives_the_projected_truncated_seed() {
        let params = ModelParams::default();
        let (grid, seed, cutoff) = setup(64, &params);
        let zero = VectorField::zeros(grid.clone());
        let (u0, b0, report) = assemble_initial_data(&params, &seed, &cutoff, &zero, &zero).unwrap();
        let mut scaled = seed.field().clone();
        scaled.scale(params.alpha1);
        let expect = leray_project(&scalar_vector_product(cutoff.samples(), &scaled, true));
        assert!(u0.diff(&expect).unwrap().max_coeff() < 1e-15);
        assert!(report.divergence_residual < 1e-12);
        assert!(b0.all_finite());
        assert!(report.u_h3 > 0.0 && report.b_h3 > 0.0);
    }

    #[test]
    fn oversized_background_is_rejected() {
        let params = ModelParams::default();
        let (grid, seed, cutoff) = setup(32, &params);
        let budget = params.m0.powf(-0.5);
        let u01 = random_h3_field(&grid, 3, 1.1 * budget, 42).unwrap();
        let zero = VectorField::zeros(grid.clone());
        match assemble_initial_data(&params, &seed, &cutoff, &u01, &zero) {
            Err(Error::BackgroundTooLarge { measured, allowed }) => {
                assert!((allowed - budget).abs() < 1e-15);
                assert!(measured > allowed);
            }
            Err(e) => panic!("expected a budget rejection, got {e}"),
            Ok(_) => panic!("expected a budget rejection, got data"),
        }
    }

    #[test]
    fn compressible_background_is_rejected() {
        let params = ModelParams::default();
        let (grid, seed, cutoff) = setup(32, &params);
        // A gradient field is purely compressible.
        let mut bad = VectorField::zeros(grid.clone());
        bad.set_mode_pair([1, 0, 0], [C64::new(0.0, 0.001), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let zero = VectorField::zeros(grid.clone());
        assert!(matches!(
            assemble_initial_data(&params, &seed, &cutoff, &bad, &zero),
            Err(Error::InvalidParameter { name: "u01", .. })
        ));
    }

    #[test]
    fn random_background_hits_its_norm_target_exactly() {
        let grid = Grid::new(32, 32.0).unwrap();
        let f = random_h3_field(&grid, 4, 0.35, 7).unwrap();
        assert!((sobolev_norm(&f, 3) - 0.35).abs() < 1e-13);
        assert!(rel_divergence(&f) < 1e-14);
        let again = random_h3_field(&grid, 4, 0.35, 7).unwrap();
        assert_eq!(f.diff(&again).unwrap().max_coeff(), 0.0);
    }

    #[test]
    fn sup_norm_tracks_the_spectral_budget_not_the_support_scale() {
        // The packet peak is set by the Fourier L1 budget m1, so the sup
        // of the assembled fields should be nearly flat across m0, while
        // the H3 norm follows the decay-constant ladder sum.
        let mut sups = Vec::new();
        let mut ratios = Vec::new();
        for m0 in [2.0, 4.0, 8.0] {
            let params = ModelParams {
                m0,
                ..ModelParams::default()
            };
            let grid = Grid::new(128, params.period()).unwrap();
            let seed = build_beltrami_seed(&params, &grid, RadialProfile::SmoothBump, 23).unwrap();
            let cutoff = build_cutoff(&grid, m0).unwrap();
            let zero = VectorField::zeros(grid.clone());
            let (_, _, report) =
                assemble_initial_data(&params, &seed, &cutoff, &zero, &zero).unwrap();
            sups.push(report.u_sup + report.b_sup);
            let m2 = crate::algebra::decay_weighted_sup(seed.field(), 0);
            let ladder: f64 = (0..=3).map(|k| m2 / m0.powi(k)).sum();
            ratios.push(report.u_h3 / ladder);
        }
        let sup_spread = sups.iter().cloned().fold(f64::MIN, f64::max)
            / sups.iter().cloned().fold(f64::MAX, f64::min);
        assert!(sup_spread < 1.2, "sup norms {sups:?}");
        let ratio_spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
            / ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(ratio_spread < 4.0, "h3 / ladder ratios {ratios:?}");
    }
}
