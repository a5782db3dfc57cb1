//! Velocity-jump model with a biased reorientation kernel.
//!
//! Particles move at fixed speed `v` and turn at rate `alpha` into a new
//! heading drawn from
//!
//! ```text
//! T(theta, theta_g) = (J cos(theta - theta_g) + 1) / (4 pi^2),   |J| < 1.
//! ```
//!
//! After a spatial Fourier transform the steady heading distribution `P(theta)`
//! must satisfy a homogeneous Fredholm equation of the second kind. The
//! discrete operator below checks numerically that it has no nontrivial
//! solution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{theta_nodes, theta_weight, trapezoid_theta, DenseMatrix};
use crate::params::Violation;
use crate::{Error, Result};

/// Smallest angular resolution accepted by the assembly.
pub const MIN_ANGLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    #[serde(default = "unit")]
    pub v: f64,
    #[serde(default = "unit")]
    pub alpha_turn: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

fn unit() -> f64 {
    1.0
}

impl KernelParams {
    pub fn new(v: f64, alpha_turn: f64, j: f64) -> Result<Self> {
        let kp = Self { v, alpha_turn, j };
        kp.validate()?;
        Ok(kp)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.v > 0.0) {
            bad.push(Violation {
                field: "v",
                constraint: "must be positive",
            });
        }
        if !(self.alpha_turn > 0.0) {
            bad.push(Violation {
                field: "alpha_turn",
                constraint: "must be positive",
            });
        }
        if !(self.j.abs() < 1.0) {
            bad.push(Violation {
                field: "J",
                constraint: "must satisfy |J| < 1",
            });
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint(bad))
        }
    }
}

fn check_angles(m: usize) -> Result<()> {
    if m < MIN_ANGLES {
        return Err(Error::Invalid(format!(
            "need at least {MIN_ANGLES} angles, got {m}"
        )));
    }
    Ok(())
}

/// Reorientation kernel for heading `theta` and gradient direction `theta_g`.
pub fn kernel_t(theta: f64, theta_g: f64, kp: &KernelParams) -> Result<f64> {
    kp.validate()?;
    Ok(kernel_unchecked(theta - theta_g, kp.j))
}

fn kernel_unchecked(angle: f64, j: f64) -> f64 {
    (j * angle.cos() + 1.0) / (4.0 * PI * PI)
}

/// Trapezoid approximation of the double integral of `T` over
/// `[-pi, pi)^2`, which is exactly 1.
pub fn kernel_norm_check(kp: &KernelParams, m: usize) -> Result<f64> {
    kp.validate()?;
    check_angles(m)?;
    let nodes = theta_nodes(m);
    let inner: Vec<f64> = nodes
        .iter()
        .map(|&tg| {
            let row: Vec<f64> = nodes
                .iter()
                .map(|&t| kernel_unchecked(t - tg, kp.j))
                .collect();
            trapezoid_theta(&row)
        })
        .collect::<Result<_>>()?;
    trapezoid_theta(&inner)
}

/// Integral of `T` over the heading alone, with `theta_g = 0`. This is
/// `1/(2 pi)`, not 1.
pub fn kernel_single_integral(kp: &KernelParams, m: usize) -> Result<f64> {
    kp.validate()?;
    check_angles(m)?;
    let row: Vec<f64> = theta_nodes(m)
        .iter()
        .map(|&t| kernel_unchecked(t, kp.j))
        .collect();
    trapezoid_theta(&row)
}

#[derive(Debug, Clone)]
pub struct FredholmOperator {
    pub m: usize,
    pub k: f64,
    pub matrix: DenseMatrix,
}

/// Discrete operator
/// `(A P)_j = (2 pi i k v cos theta_j + alpha) P_j - alpha T(theta_j, 0) sum_j' w P_j'`.
pub fn assemble_fredholm(k: f64, kp: &KernelParams, m: usize) -> Result<FredholmOperator> {
    kp.validate()?;
    check_angles(m)?;
    let nodes = theta_nodes(m);
    let w = theta_weight(m);
    let mut a = DenseMatrix::zeros(m, m);
    for (i, &t) in nodes.iter().enumerate() {
        let gain = kp.alpha_turn * kernel_unchecked(t, kp.j) * w;
        for jj in 0..m {
            a[(i, jj)] = Complex64::from(-gain);
        }
        a[(i, i)] += Complex64::new(kp.alpha_turn, 2.0 * PI * k * kp.v * t.cos());
    }
    Ok(FredholmOperator { m, k, matrix: a })
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub k: f64,
    pub sigma_min: std::result::Result<f64, String>,
}

/// Smallest singular value of the operator at each wavenumber, in input
/// order. Cells run on the current rayon pool.
pub fn nullspace_scan(k_values: &[f64], kp: &KernelParams, m: usize) -> Result<Vec<ScanRow>> {
    kp.validate()?;
    check_angles(m)?;
    Ok(k_values
        .par_iter()
        .map(|&k| ScanRow {
            k,
            sigma_min: assemble_fredholm(k, kp, m)
                .and_then(|op| op.matrix.min_singular_value())
                .map_err(|e| e.to_string()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kp(j: f64) -> KernelParams {
        KernelParams::new(1.0, 1.0, j).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert!((kernel_t(0.3, -2.0, &kp(0.0)).unwrap() - 0.025330295910584444).abs() < 1e-15);
        assert!((kernel_t(1.0, 1.0, &kp(0.5)).unwrap() - 0.03799544386587666).abs() < 1e-15);
        assert!((kernel_t(PI, 0.0, &kp(0.5)).unwrap() - 0.012665147955292222).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters() {
        assert!(KernelParams::new(1.0, 1.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, 1.0, -1.2).is_err());
        assert!(KernelParams::new(0.0, 1.0, 0.0).is_err());
        let bad = KernelParams {
            v: 1.0,
            alpha_turn: 1.0,
            j: 1.0,
        };
        assert!(kernel_t(0.0, 0.0, &bad).is_err());
        assert!(assemble_fredholm(0.0, &kp(0.0), 4).is_err());
    }

    #[test]
    fn normalization() {
        assert!((kernel_norm_check(&kp(0.0), 16).unwrap() - 1.0).abs() < 1e-14);
        for j in [0.0, 0.5, 0.9] {
            assert!((kernel_norm_check(&kp(j), 64).unwrap() - 1.0).abs() < 1e-12);
            let single = kernel_single_integral(&kp(j), 64).unwrap();
            assert!((single - 1.0 / (2.0 * PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_heading_at_zero_wavenumber() {
        for alpha in [1.0, 2.5] {
            let kp = KernelParams::new(1.0, alpha, 0.0).unwrap();
            let op = assemble_fredholm(0.0, &kp, 32).unwrap();
            let y = op.matrix.mul_vec(&vec![Complex64::from(1.0); 32]);
            let expected = alpha * (1.0 - 1.0 / (2.0 * PI));
            assert!(y.iter().all(|z| (z - expected).norm() < 1e-12));
        }
    }

    #[test]
    fn kernel_shape_is_eigenvector() {
        let j = 0.5;
        let op = assemble_fredholm(0.0, &kp(j), 40).unwrap();
        let p: Vec<Complex64> = theta_nodes(40)
            .iter()
            .map(|t| Complex64::from(j * t.cos() + 1.0))
            .collect();
        let y = op.matrix.mul_vec(&p);
        let lam = 1.0 - 1.0 / (2.0 * PI);
        for (a, b) in y.iter().zip(&p) {
            assert!((a - b * lam).norm() < 1e-12);
        }
        let doubled: Vec<Complex64> = p.iter().map(|z| z * 2.0).collect();
        let y2 = op.matrix.mul_vec(&doubled);
        for (a, b) in y2.iter().zip(&y) {
            assert!((a - b * 2.0).norm() < 1e-13);
        }
    }

    #[test]
    fn no_nullspace_at_zero_wavenumber() {
        let rows = nullspace_scan(&[0.0], &kp(0.0), 64).unwrap();
        let s = rows[0].sigma_min.clone().unwrap();
        assert!((s - (1.0 - 1.0 / (2.0 * PI))).abs() < 1e-12);
    }

    #[test]
    fn wavenumber_sign_symmetry() {
        for j in [0.0, 0.5, 0.9] {
            let rows = nullspace_scan(&[0.7, -0.7, 2.0, -2.0], &kp(j), 48).unwrap();
            let s: Vec<f64> = rows.iter().map(|r| r.sigma_min.clone().unwrap()).collect();
            assert!((s[0] - s[1]).abs() < 1e-12);
            assert!((s[2] - s[3]).abs() < 1e-12);
            let a = assemble_fredholm(0.7, &kp(j), 16).unwrap().matrix;
            let b = assemble_fredholm(-0.7, &kp(j), 16).unwrap().matrix;
            assert_eq!(a.conj(), b);
        }
    }

    fn sigma(k: f64, j: f64, m: usize) -> f64 {
        nullspace_scan(&[k], &kp(j), m).unwrap()[0]
            .sigma_min
            .clone()
            .unwrap()
    }

    #[test]
    fn quadrature_converged_for_isolated_minimum() {
        for j in [0.0, 0.5, 0.9] {
            assert!((sigma(0.0, j, 64) - sigma(0.0, j, 128)).abs() < 1e-12);
            // Exponential convergence once the grid resolves the near-pole
            // width around cos(theta) = 0.
            assert!((sigma(0.25, j, 128) - sigma(0.25, j, 256)).abs() < 1e-6);
        }
    }

    #[test]
    fn larger_wavenumbers_approach_the_turn_rate() {
        // For |k| >= 0.5 the smallest singular value lies at the edge of the
        // continuous spectrum inf |alpha + 2 pi i k v cos theta| = alpha and
        // is approached from below only algebraically in m.
        for k in [0.5, 1.0, 2.0] {
            let s: Vec<f64> = [64, 128, 256].iter().map(|&m| sigma(k, 0.5, m)).collect();
            assert!(s[0] < s[1] && s[1] < s[2] && s[2] < 1.0, "{s:?}");
            assert!(s[1] - s[0] > 1e-4);
        }
    }

    proptest! {
        #[test]
        fn kernel_positive_and_shift_invariant(j in -0.999f64..0.999, t in -10.0f64..10.0,
                                               tg in -10.0f64..10.0, shift in -10.0f64..10.0) {
            let kp = KernelParams::new(1.0, 1.0, j).unwrap();
            let a = kernel_t(t, tg, &kp).unwrap();
            let b = kernel_t(t + shift, tg + shift, &kp).unwrap();
            prop_assert!(a > 0.0);
            prop_assert!((a - b).abs() < 1e-14);
        }
    }
}
