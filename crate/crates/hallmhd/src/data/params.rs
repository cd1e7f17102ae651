//! Model parameters and their admissibility rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical coefficients and construction scales for one experiment.
///
/// The box period is tied to the localization scale as `P = 8 m0`, so the
/// cutoff support `|x| <= 2 m0` always sits inside the half-box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Viscosity.
    pub nu: f64,
    /// Magnetic diffusivity.
    pub mu: f64,
    /// Hall coefficient; zero switches the Hall term off entirely.
    pub eta: f64,
    /// Half-width of the spectral annulus carrying the seed.
    pub delta: f64,
    /// Localization scale: cutoff plateau radius, box period / 8.
    pub m0: f64,
    /// Spectral L1 budget the seed is normalized to.
    pub m1: f64,
    /// Pointwise-decay constant the seed is reported against.
    pub m2: f64,
    /// Velocity seed amplitude.
    pub alpha1: f64,
    /// Magnetic seed amplitude.
    pub alpha2: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            nu: 2.0,
            mu: 4.0,
            eta: 1.0,
            delta: 0.25,
            m0: 4.0,
            m1: 50.0,
            m2: 25.0,
            alpha1: 1.0,
            alpha2: 1.0,
        }
    }
}

impl ModelParams {
    /// Box period tied to the localization scale.
    pub fn period(&self) -> f64 {
        8.0 * self.m0
    }

    /// Reject out-of-range or non-finite parameters.
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("nu", self.nu, self.nu > 0.0, "nu > 0"),
            ("mu", self.mu, self.mu > 0.0, "mu > 0"),
            ("eta", self.eta, self.eta >= 0.0, "eta >= 0"),
            (
                "delta",
                self.delta,
                self.delta > 0.0 && self.delta <= 0.5,
                "0 < delta <= 1/2",
            ),
            ("m0", self.m0, self.m0 >= 1.0, "m0 >= 1"),
            ("m1", self.m1, self.m1 > 0.0, "m1 > 0"),
            ("m2", self.m2, self.m2 > 0.0, "m2 > 0"),
            ("alpha1", self.alpha1, self.alpha1.is_finite(), "finite"),
            ("alpha2", self.alpha2, self.alpha2.is_finite(), "finite"),
        ];
        for (name, value, ok, constraint) in checks {
            if !(ok && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    constraint,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = ModelParams::default();
        p.validate().unwrap();
        assert_eq!(p.period(), 32.0);
    }

    #[test]
    fn each_constraint_rejects() {
        let base = ModelParams::default();
        let cases: Vec<ModelParams> = vec![
            ModelParams { nu: 0.0, ..base },
            ModelParams { mu: -1.0, ..base },
            ModelParams { eta: -0.5, ..base },
            ModelParams { delta: 0.0, ..base },
            ModelParams { delta: 0.6, ..base },
            ModelParams { m0: 0.5, ..base },
            ModelParams { m1: 0.0, ..base },
            ModelParams { m2: -2.0, ..base },
            ModelParams {
                alpha1: f64::NAN,
                ..base
            },
            ModelParams {
                nu: f64::INFINITY,
                ..base
            },
        ];
        for (i, p) in cases.iter().enumerate() {
            assert!(p.validate().is_err(), "case {i} should be rejected");
        }
    }

    #[test]
    fn zero_hall_coefficient_is_admissible() {
        let p = ModelParams {
            eta: 0.0,
            ..ModelParams::default()
        };
        p.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_preserves_fields() {
        let p = ModelParams {
            nu: 1.25,
            m0: 2.0,
            ..ModelParams::default()
        };
        let text = toml::to_string(&p).unwrap();
        let back: ModelParams = toml::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let p: ModelParams = toml::from_str("nu = 8.0").unwrap();
        assert_eq!(p.nu, 8.0);
        assert_eq!(p.mu, ModelParams::default().mu);
    }
}
