//! Model constants and the positivity constraints they must satisfy.
//!
//! The steady ant-mill profiles are
//!
//! ```text
//! rho0(r)    = alpha/(beta*lambda) * (C2 * r^(-p) - 1)
//! g0(r)      = lambda * rho0(r)
//! vtheta0(r) = sqrt(b * C2 * p) * r^(-p/2),     p = C1 + alpha/(beta*lambda)
//! ```
//!
//! so every constant has to be strictly positive before anything is evaluated.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Continuum constants of the density, chemical and velocity equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Chemotactic saturation constant.
    pub alpha: f64,
    /// Chemotactic sensitivity.
    pub beta: f64,
    /// Chemical deposition rate.
    pub lambda: f64,
    /// Coupling between the chemical gradient and the velocity.
    pub b: f64,
    /// Diffusion scale of the density equation. The closed-form steady state is the `diffusion = 1` case.
    #[serde(default = "default_diffusion")]
    pub diffusion: f64,
}

fn default_diffusion() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, lambda: f64, b: f64) -> Self {
        Self {
            alpha,
            beta,
            lambda,
            b,
            diffusion: 1.0,
        }
    }

    pub fn with_b(self, b: f64) -> Self {
        Self { b, ..self }
    }

    /// `alpha / (beta * lambda)`, the amplitude of the steady density.
    pub fn density_scale(&self) -> f64 {
        self.alpha / (self.beta * self.lambda)
    }
}

/// Integration constants of the steady solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateConstants {
    pub c1: f64,
    pub c2: f64,
    /// Decay exponent `c1 + alpha/(beta*lambda)`.
    pub p: f64,
}

impl SteadyStateConstants {
    pub fn new(params: &ModelParams, c1: f64, c2: f64) -> Self {
        Self {
            c1,
            c2,
            p: c1 + params.density_scale(),
        }
    }
}

/// One failed constraint. Violations are collected, not raised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub constraint: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.constraint)
    }
}

/// Result of a validation pass: empty means ok.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn require_positive(&mut self, field: &'static str, value: f64) {
        // NaN fails as well.
        if !(value > 0.0) {
            self.violations.push(Violation {
                field,
                constraint: "must be positive",
            });
        }
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(crate::Error::Constraint(self.violations))
        }
    }
}

pub fn validate_params(p: &ModelParams) -> Validation {
    let mut v = Validation::default();
    v.require_positive("alpha", p.alpha);
    v.require_positive("beta", p.beta);
    v.require_positive("lambda", p.lambda);
    v.require_positive("b", p.b);
    v.require_positive("diffusion", p.diffusion);
    v
}

/// Checks `C2 > 0` and `p > 0`. The exponent is recomputed from `params`
/// rather than trusted from `c.p`.
pub fn validate_constants(params: &ModelParams, c: &SteadyStateConstants) -> Validation {
    let mut v = Validation::default();
    v.require_positive("C₂", c.c2);
    v.require_positive("p", c.c1 + params.density_scale());
    v
}

/// Radius `r* = C2^(1/p)` where the steady density reaches zero.
pub fn admissible_outer_radius(params: &ModelParams, c: &SteadyStateConstants) -> f64 {
    let p = c.c1 + params.density_scale();
    c.c2.powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 1.0)
    }

    #[test]
    fn all_positive_is_ok() {
        assert!(validate_params(&unit()).is_ok());
    }

    #[test]
    fn negative_beta_is_reported() {
        let p = ModelParams {
            beta: -1.0,
            ..unit()
        };
        let v = validate_params(&p);
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].to_string(), "beta must be positive");
    }

    #[test]
    fn zero_alpha_is_rejected() {
        let p = ModelParams {
            alpha: 0.0,
            ..unit()
        };
        let v = validate_params(&p);
        assert_eq!(v.violations[0].to_string(), "alpha must be positive");
    }

    #[test]
    fn nan_is_rejected() {
        let p = ModelParams {
            diffusion: f64::NAN,
            ..unit()
        };
        assert!(!validate_params(&p).is_ok());
    }

    #[test]
    fn constants_ok_and_exponent() {
        let c = SteadyStateConstants::new(&unit(), 0.5, 2.0);
        assert!(validate_constants(&unit(), &c).is_ok());
        assert_eq!(c.p, 1.5);
    }

    #[test]
    fn negative_exponent_is_reported() {
        let c = SteadyStateConstants::new(&unit(), -2.0, 1.0);
        assert_eq!(c.p, -1.0);
        let v = validate_constants(&unit(), &c);
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].to_string(), "p must be positive");
    }

    #[test]
    fn negative_c2_is_reported() {
        let c = SteadyStateConstants::new(&unit(), 0.5, -1.0);
        let v = validate_constants(&unit(), &c);
        assert_eq!(v.violations[0].to_string(), "C₂ must be positive");
        assert!(matches!(v.into_result(), Err(crate::Error::Constraint(_))));
    }

    #[test]
    fn outer_radius_examples() {
        let u = unit();
        let r = admissible_outer_radius(&u, &SteadyStateConstants::new(&u, 0.0, 1.0));
        assert_eq!(r, 1.0);
        let r = admissible_outer_radius(&u, &SteadyStateConstants::new(&u, 0.5, 2.0));
        assert!((r - 2f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((r - 1.5874).abs() < 1e-4);
        let r = admissible_outer_radius(&u, &SteadyStateConstants::new(&u, 1.0, 4.0));
        assert!((r - 2.0).abs() < 1e-15);
    }

    fn positive() -> impl Strategy<Value = f64> {
        (-2.0f64..2.0).prop_map(|e| 10f64.powf(e))
    }

    proptest! {
        #[test]
        fn density_vanishes_at_outer_radius(a in positive(), b in positive(), l in positive(),
                                            p in 0.05f64..3.0, c2 in positive()) {
            let params = ModelParams::new(a, b, l, 1.0);
            let c = SteadyStateConstants::new(&params, p - params.density_scale(), c2);
            let r = admissible_outer_radius(&params, &c);
            let shape = c.c2 * r.powf(-c.p);
            prop_assert!((shape - 1.0).abs() < 1e-12);
        }

        #[test]
        fn validation_monotone_in_c2(c1 in -0.9f64..3.0, c2 in positive(), k in 1.0f64..10.0) {
            let params = ModelParams::new(1.0, 1.0, 1.0, 1.0);
            let c = SteadyStateConstants::new(&params, c1, c2);
            prop_assume!(validate_constants(&params, &c).is_ok());
            let bigger = SteadyStateConstants::new(&params, c1, c2 * k);
            prop_assert!(validate_constants(&params, &bigger).is_ok());
        }

        #[test]
        fn scaling_c2_scales_outer_radius(c1 in -0.5f64..2.0, c2 in positive(), k in positive()) {
            let params = ModelParams::new(1.0, 1.0, 1.0, 1.0);
            let c = SteadyStateConstants::new(&params, c1, c2);
            let scaled = SteadyStateConstants::new(&params, c1, c2 * k);
            let r0 = admissible_outer_radius(&params, &c);
            let r1 = admissible_outer_radius(&params, &scaled);
            prop_assert!((r1 / r0 - k.powf(1.0 / c.p)).abs() < 1e-10 * k.powf(1.0 / c.p));
        }
    }
}
