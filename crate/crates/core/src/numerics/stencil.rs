//! Second-order finite-difference stencils on a uniform radial grid.
//!
//! Interior nodes use central differences; the two end nodes use second-order
//! one-sided closures. The same rows are used to differentiate fields and to
//! assemble discrete operators, so both routes see identical weights.

use super::grid::{RadialField, RadialGrid, Scalar};

const D1_CENTRAL: [f64; 3] = [-0.5, 0.0, 0.5];
const D1_FORWARD: [f64; 3] = [-1.5, 2.0, -0.5];
const D1_BACKWARD: [f64; 3] = [0.5, -2.0, 1.5];

const D2_CENTRAL: [f64; 3] = [1.0, -2.0, 1.0];
const D2_FORWARD: [f64; 4] = [2.0, -5.0, 4.0, -1.0];
const D2_BACKWARD: [f64; 4] = [-1.0, 4.0, -5.0, 2.0];

/// Weights `coeffs[k] * scale` applied to nodes `start + k`.
#[derive(Debug, Clone, Copy)]
pub struct StencilRow {
    pub start: usize,
    pub coeffs: &'static [f64],
    pub scale: f64,
}

impl StencilRow {
    pub fn weights(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.start + k, c * self.scale))
    }

    pub fn apply<T: Scalar>(&self, values: &[T]) -> T {
        self.weights()
            .fold(T::zero(), |acc, (j, w)| acc + values[j] * w)
    }
}

pub fn first_derivative_row(grid: &RadialGrid, i: usize) -> StencilRow {
    let n = grid.len();
    let scale = 1.0 / grid.dr();
    if i == 0 {
        StencilRow {
            start: 0,
            coeffs: &D1_FORWARD,
            scale,
        }
    } else if i + 1 == n {
        StencilRow {
            start: n - 3,
            coeffs: &D1_BACKWARD,
            scale,
        }
    } else {
        StencilRow {
            start: i - 1,
            coeffs: &D1_CENTRAL,
            scale,
        }
    }
}

pub fn second_derivative_row(grid: &RadialGrid, i: usize) -> StencilRow {
    let n = grid.len();
    let dr = grid.dr();
    let scale = 1.0 / (dr * dr);
    if i == 0 {
        StencilRow {
            start: 0,
            coeffs: &D2_FORWARD,
            scale,
        }
    } else if i + 1 == n {
        StencilRow {
            start: n - 4,
            coeffs: &D2_BACKWARD,
            scale,
        }
    } else {
        StencilRow {
            start: i - 1,
            coeffs: &D2_CENTRAL,
            scale,
        }
    }
}

/// First radial derivative.
pub fn ddr<T: Scalar>(f: &RadialField<T>) -> RadialField<T> {
    let grid = *f.grid();
    let v = f.values();
    let out = (0..grid.len())
        .map(|i| first_derivative_row(&grid, i).apply(v))
        .collect();
    RadialField::new(grid, out).expect("length preserved")
}

/// Second radial derivative.
///
/// The one-sided end closures need four nodes; on a three-node grid the end
/// values fall back to the central value of the single interior node.
pub fn d2dr2<T: Scalar>(f: &RadialField<T>) -> RadialField<T> {
    let grid = *f.grid();
    let v = f.values();
    let out = if grid.len() == 3 {
        let c = second_derivative_row(&grid, 1).apply(v);
        vec![c; 3]
    } else {
        (0..grid.len())
            .map(|i| second_derivative_row(&grid, i).apply(v))
            .collect()
    };
    RadialField::new(grid, out).expect("length preserved")
}
