use std::f64::consts::PI;

use super::grid::Scalar;
use crate::{Error, Result};

/// Angles `theta_j = -pi + 2*pi*j/m`.
pub fn theta_nodes(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| -PI + 2.0 * PI * j as f64 / m as f64)
        .collect()
}

/// Uniform weight `2*pi/m` of the periodic trapezoid rule.
pub fn theta_weight(m: usize) -> f64 {
    2.0 * PI / m as f64
}

/// Periodic trapezoid rule over `[-pi, pi)`. Exact for trigonometric
/// polynomials of degree below `m/2`.
pub fn trapezoid_theta<T: Scalar>(samples: &[T]) -> Result<T> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::Invalid(format!(
            "periodic quadrature needs at least 2 samples, got {m}"
        )));
    }
    let sum = samples.iter().fold(T::zero(), |acc, &s| acc + s);
    Ok(sum * theta_weight(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let cos: Vec<f64> = theta_nodes(16).iter().map(|t| t.cos()).collect();
        assert!(trapezoid_theta(&cos).unwrap().abs() < 1e-14);
        let ones = vec![1.0; 8];
        assert!((trapezoid_theta(&ones).unwrap() - 2.0 * PI).abs() < 1e-14);
        let cos2: Vec<f64> = theta_nodes(16).iter().map(|t| t.cos().powi(2)).collect();
        assert!((trapezoid_theta(&cos2).unwrap() - PI).abs() < 1e-14);
    }

    #[test]
    fn too_few_samples() {
        assert!(trapezoid_theta(&[1.0]).is_err());
        assert!(trapezoid_theta::<f64>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn pure_harmonics_vanish(m in 4usize..80, kraw in 1usize..40, neg in any::<bool>()) {
            let k = 1 + (kraw - 1) % ((m - 1) / 2).max(1);
            prop_assume!(2 * k < m);
            let k = if neg { -(k as f64) } else { k as f64 };
            let s: Vec<Complex64> = theta_nodes(m)
                .iter()
                .map(|&t| Complex64::from_polar(1.0, k * t))
                .collect();
            prop_assert!(trapezoid_theta(&s).unwrap().norm() < 1e-12);
        }
    }
}
