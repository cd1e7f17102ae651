//! The differential energy inequality of a run and its consequences.
//!
//! A trajectory of perturbation samples is tested against
//!
//! ```text
//! dE/dt + (min(nu,mu)/2 - C (sqrt(e_u)+sqrt(e_b))) (d_u+d_b)
//!       <= C (e^{-nu t/4}+e^{-mu t/4}) (E + 1/m0 + delta^2 m0^3)
//! ```
//!
//! with `E = e_u + e_b`. The residual moves everything to the left, so
//! the inequality holds at a sample exactly when the residual is
//! nonpositive. The residual is strictly decreasing in `C` (its
//! coefficient aggregates nonnegative dissipation terms and a strictly
//! positive decay envelope), so the minimal constant closing the
//! inequality at every interior sample is found by bracketing and
//! bisection.
//!
//! `dE/dt` uses the three-point centered formula on nonuniform spacing,
//! exact for quadratics in `t`; only interior samples are scored.

use serde::{Deserialize, Serialize};

use crate::data::ModelParams;
use crate::error::{Error, Result};

use super::sample::PerturbationSample;

/// Outcome of fitting the minimal inequality constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterFit {
    /// Minimal constant closing the inequality at every interior sample.
    pub c: f64,
    /// `(t, residual)` at the fitted constant, interior samples only.
    pub residuals: Vec<(f64, f64)>,
    /// `-max residual` at the fitted constant: how much slack remains.
    pub margin: f64,
}

/// Boundedness and smallness verdicts of a completed trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapVerdict {
    /// `min(nu,mu) / (4 c)`; infinite when the fitted constant is zero.
    pub threshold: f64,
    /// Largest perturbation energy along the run.
    pub e_max: f64,
    /// Energy at the final sample.
    pub e_final: f64,
    /// Whether `E(t) <= threshold` at every sample.
    pub within_threshold: bool,
    /// `sup_t (sqrt(e_u) + sqrt(e_b))`.
    pub sup_perturbation: f64,
    /// `sup_perturbation * sqrt(m0)`: the smallness conclusion claims
    /// this stays order one as `m0` grows.
    pub m0_scaled_sup: f64,
    /// Empirical boundedness level: four times the initial energy plus
    /// the time-integrated forcing envelope.
    pub bound_level: f64,
    /// Whether `e_max <= bound_level`.
    pub bounded: bool,
}

/// Left-hand side of the inequality at every interior sample for a given
/// constant, as `(t, residual)` pairs. Nonpositive residuals mean the
/// inequality holds there.
pub fn master_inequality_residuals(
    samples: &[PerturbationSample],
    params: &ModelParams,
    c: f64,
) -> Result<Vec<(f64, f64)>> {
    validate_series(samples)?;
    if !c.is_finite() || c < 0.0 {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            constraint: "finite and nonnegative",
        });
    }
    let mut out = Vec::with_capacity(samples.len() - 2);
    for i in 1..samples.len() - 1 {
        let s = &samples[i];
        let dedt = centered_derivative(
            [&samples[i - 1], s, &samples[i + 1]].map(|q| (q.t, q.energy())),
        );
        out.push((s.t, residual(s, dedt, params, c)));
    }
    Ok(out)
}

/// Minimal constant making every interior residual nonpositive.
pub fn fit_minimal_c(samples: &[PerturbationSample], params: &ModelParams) -> Result<MasterFit> {
    validate_series(samples)?;
    let worst = |c: f64| -> f64 {
        master_inequality_residuals(samples, params, c)
            .expect("series validated above")
            .into_iter()
            .fold(f64::NEG_INFINITY, |acc, (_, r)| acc.max(r))
    };
    let mut c = 0.0;
    if worst(0.0) > 0.0 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while worst(hi) > 0.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::InvalidParameter {
                    name: "c",
                    value: hi,
                    constraint: "a constant below 1e12 closing the inequality",
                });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if worst(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        c = hi;
    }
    let residuals = master_inequality_residuals(samples, params, c)?;
    let margin = -residuals.iter().fold(f64::NEG_INFINITY, |acc, &(_, r)| acc.max(r));
    Ok(MasterFit { c, residuals, margin })
}

/// Boundedness and smallness report for a completed trajectory at a
/// fitted constant.
pub fn bootstrap_check(
    samples: &[PerturbationSample],
    params: &ModelParams,
    fitted_c: f64,
) -> Result<BootstrapVerdict> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: 0.0,
            constraint: "at least one sample",
        });
    }
    if !fitted_c.is_finite() || fitted_c < 0.0 {
        return Err(Error::InvalidParameter {
            name: "fitted_c",
            value: fitted_c,
            constraint: "finite and nonnegative",
        });
    }
    let threshold = if fitted_c > 0.0 {
        params.nu.min(params.mu) / (4.0 * fitted_c)
    } else {
        f64::INFINITY
    };
    let mut e_max = 0.0f64;
    let mut sup_perturbation = 0.0f64;
    for s in samples {
        e_max = e_max.max(s.energy());
        sup_perturbation = sup_perturbation.max(s.e_u.sqrt() + s.e_b.sqrt());
    }
    let forcing_level = params.m0.recip() + params.delta * params.delta * params.m0.powi(3);
    let envelope = 4.0 / params.nu + 4.0 / params.mu;
    let bound_level = 4.0 * (samples[0].energy() + forcing_level * envelope);
    Ok(BootstrapVerdict {
        threshold,
        e_max,
        e_final: samples[samples.len() - 1].energy(),
        within_threshold: e_max <= threshold,
        sup_perturbation,
        m0_scaled_sup: sup_perturbation * params.m0.sqrt(),
        bound_level,
        bounded: e_max <= bound_level,
    })
}

fn validate_series(samples: &[PerturbationSample]) -> Result<()> {
    if samples.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples.len() as f64,
            constraint: "at least 3 samples",
        });
    }
    for pair in samples.windows(2) {
        if !(pair[1].t > pair[0].t) {
            return Err(Error::InvalidParameter {
                name: "samples",
                value: pair[1].t,
                constraint: "strictly increasing sample times",
            });
        }
    }
    Ok(())
}

/// Three-point derivative at the middle node of `(t, y)` triples with
/// arbitrary spacing; exact for quadratics.
fn centered_derivative(p: [(f64, f64); 3]) -> f64 {
    let [(t0, y0), (t1, y1), (t2, y2)] = p;
    y0 * (t1 - t2) / ((t0 - t1) * (t0 - t2))
        + y1 * (2.0 * t1 - t0 - t2) / ((t1 - t0) * (t1 - t2))
        + y2 * (t1 - t0) / ((t2 - t0) * (t2 - t1))
}

fn residual(s: &PerturbationSample, dedt: f64, params: &ModelParams, c: f64) -> f64 {
    let half_visc = 0.5 * params.nu.min(params.mu);
    let decay = (-params.nu * s.t / 4.0).exp() + (-params.mu * s.t / 4.0).exp();
    let forcing_level = params.m0.recip() + params.delta * params.delta * params.m0.powi(3);
    dedt + (half_visc - c * (s.e_u.sqrt() + s.e_b.sqrt())) * (s.d_u + s.d_b)
        - c * decay * (s.energy() + forcing_level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, e_u: f64, e_b: f64, d_u: f64, d_b: f64) -> PerturbationSample {
        PerturbationSample {
            t,
            e_u,
            e_b,
            d_u,
            d_b,
            forcing_f: 0.0,
            forcing_g: 0.0,
            cancellation_residuals: None,
        }
    }

    #[test]
    fn zero_trajectory_needs_no_constant() {
        let params = ModelParams::default();
        let samples: Vec<_> = (0..6).map(|i| sample(0.3 * i as f64, 0.0, 0.0, 0.0, 0.0)).collect();
        let fit = fit_minimal_c(&samples, &params).unwrap();
        assert_eq!(fit.c, 0.0);
        assert!(fit.margin >= 0.0);
        let verdict = bootstrap_check(&samples, &params, fit.c).unwrap();
        assert!(verdict.within_threshold);
        assert!(verdict.bounded);
        assert_eq!(verdict.sup_perturbation, 0.0);
        assert!(verdict.threshold.is_infinite());
    }

    #[test]
    fn centered_derivative_is_exact_on_quadratics_with_uneven_spacing() {
        let params = ModelParams::default();
        let e = |t: f64| 2.0 + 3.0 * t + 4.0 * t * t;
        let times = [0.0, 0.07, 0.1, 0.25, 0.4];
        let samples: Vec<_> = times.iter().map(|&t| sample(t, e(t), 0.0, 0.0, 0.0)).collect();
        // With c = 0 and no dissipation the residual reduces to dE/dt.
        let res = master_inequality_residuals(&samples, &params, 0.0).unwrap();
        assert_eq!(res.len(), 3);
        for &(t, r) in &res {
            let exact = 3.0 + 8.0 * t;
            assert!((r - exact).abs() < 1e-12 * exact, "t {t}: {r} vs {exact}");
        }
    }

    #[test]
    fn diffusive_decay_closes_without_a_constant() {
        // Single-mode diffusion: E = A exp(-2 mu xi^2 t) with
        // d_b = xi^2 E. The dissipation term alone dominates dE/dt, so
        // the minimal constant is zero regardless of sampling density.
        let params = ModelParams::default();
        let xi2 = 0.8;
        let a = 2.5;
        for h in [0.05, 0.025] {
            let samples: Vec<_> = (0..20)
                .map(|i| {
                    let t = h * i as f64;
                    let e = a * (-2.0 * params.mu * xi2 * t).exp();
                    sample(t, 0.0, e, 0.0, xi2 * e)
                })
                .collect();
            let fit = fit_minimal_c(&samples, &params).unwrap();
            assert_eq!(fit.c, 0.0, "sampling step {h}");
            assert!(fit.margin > 0.0);
        }
    }

    #[test]
    fn growing_energy_forces_the_closed_form_constant() {
        // E = 1 + t with no dissipation: residual = 1 - C decay (E + K),
        // so the minimal C is max_i 1 / (decay_i (E_i + K)).
        let params = ModelParams::default();
        let samples: Vec<_> = (0..8).map(|i| {
            let t = 0.25 * i as f64;
            sample(t, 1.0 + t, 0.0, 0.0, 0.0)
        }).collect();
        let forcing_level =
            params.m0.recip() + params.delta * params.delta * params.m0.powi(3);
        let expect = samples[1..samples.len() - 1]
            .iter()
            .map(|s| {
                let decay = (-params.nu * s.t / 4.0).exp() + (-params.mu * s.t / 4.0).exp();
                1.0 / (decay * (s.energy() + forcing_level))
            })
            .fold(0.0f64, f64::max);
        let fit = fit_minimal_c(&samples, &params).unwrap();
        assert!(
            (fit.c - expect).abs() < 1e-6 * expect,
            "fitted {} vs closed form {}",
            fit.c,
            expect
        );
        assert!(fit.margin.abs() < 1e-6);
        let res = master_inequality_residuals(&samples, &params, fit.c).unwrap();
        assert!(res.iter().all(|&(_, r)| r <= 1e-9));
    }

    #[test]
    fn bootstrap_reports_violations() {
        // Energy grows far past four times its initial level, so both the
        // threshold comparison and the boundedness level must flag it.
        let params = ModelParams::default();
        let samples: Vec<_> = (0..5)
            .map(|i| {
                let e = if i == 0 { 0.5 } else { 1e9 };
                sample(0.5 * i as f64, e, e, 0.0, 0.0)
            })
            .collect();
        let verdict = bootstrap_check(&samples, &params, 10.0).unwrap();
        assert!(!verdict.within_threshold);
        assert!(!verdict.bounded);
        assert!(verdict.e_max >= 2e9);
        assert!(verdict.m0_scaled_sup > 0.0);
    }

    #[test]
    fn short_series_are_rejected() {
        let params = ModelParams::default();
        let samples = vec![sample(0.0, 0.0, 0.0, 0.0, 0.0); 2];
        match fit_minimal_c(&samples, &params) {
            Err(Error::InvalidParameter { name: "samples", .. }) => {}
            other => panic!("expected a sample-count error, got {other:?}"),
        }
        let three = vec![
            sample(0.0, 0.0, 0.0, 0.0, 0.0),
            sample(0.5, 0.0, 0.0, 0.0, 0.0),
            sample(0.5, 0.0, 0.0, 0.0, 0.0),
        ];
        match fit_minimal_c(&three, &params) {
            Err(Error::InvalidParameter { name: "samples", .. }) => {}
            other => panic!("expected a monotonicity error, got {other:?}"),
        }
    }
}
