use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Uniform radial grid on `[r_a, r_b]` with `n` nodes, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    r_a: f64,
    r_b: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(r_a: f64, r_b: f64, n: usize) -> Result<Self> {
        if !(r_a > 0.0) || !r_a.is_finite() {
            return Err(Error::Grid(format!(
                "inner radius must be positive, got {r_a}"
            )));
        }
        if !(r_b > r_a) || !r_b.is_finite() {
            return Err(Error::Grid(format!(
                "outer radius {r_b} must exceed inner radius {r_a}"
            )));
        }
        if n < 3 {
            return Err(Error::Grid(format!("need at least 3 nodes, got {n}")));
        }
        Ok(Self { r_a, r_b, n })
    }

    pub fn r_a(&self) -> f64 {
        self.r_a
    }

    pub fn r_b(&self) -> f64 {
        self.r_b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dr(&self) -> f64 {
        (self.r_b - self.r_a) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        // Pin the last node so r_b is reproduced exactly.
        if i + 1 == self.n {
            self.r_b
        } else {
            self.r_a + i as f64 * self.dr()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Indices `1..n-1`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.n - 1
    }
}

/// Scalars a [`RadialField`] can carry.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + Send
    + Sync
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Nodal values on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField<T = f64> {
    grid: RadialGrid,
    values: Vec<T>,
}

impl<T: Scalar> RadialField<T> {
    pub fn new(grid: RadialGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, mut f: impl FnMut(f64) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, mut f: impl FnMut(f64, T) -> T) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.node(i), v))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|_, v| v * k)
    }

    /// `a*self + b*other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| x * a + y * b)
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Max modulus over interior nodes only.
    pub fn max_abs_interior(&self) -> f64 {
        self.values[self.grid.interior()]
            .iter()
            .map(|v| v.modulus())
            .fold(0.0, f64::max)
    }
}

impl RadialField<f64> {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_complex(&self) -> RadialField<Complex64> {
        RadialField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        }
    }
}

impl<T> std::ops::Index<usize> for RadialField<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialGrid::new(0.0, 1.0, 10).is_err());
        assert!(RadialGrid::new(1.0, 1.0, 10).is_err());
        assert!(RadialGrid::new(0.5, 1.0, 2).is_err());
    }

    #[test]
    fn nodes_are_uniform() {
        let g = RadialGrid::new(0.5, 1.4, 10).unwrap();
        let r = g.nodes();
        assert_eq!(r[0], 0.5);
        assert_eq!(r[9], 1.4);
        for w in r.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - g.dr()).abs() < 1e-15);
        }
    }

    #[test]
    fn field_length_checked() {
        let g = RadialGrid::new(1.0, 2.0, 4).unwrap();
        assert!(matches!(
            RadialField::new(g, vec![0.0; 3]),
            Err(Error::FieldLength {
                expected: 4,
                got: 3
            })
        ));
    }
}
