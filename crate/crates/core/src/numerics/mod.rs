//! Grids, stencils, periodic quadrature and dense linear algebra.

mod grid;
mod linalg;
mod quadrature;
mod stencil;

pub use grid::{RadialField, RadialGrid, Scalar};
pub use linalg::{DenseMatrix, NormKind};
pub use quadrature::{theta_nodes, theta_weight, trapezoid_theta};
pub use stencil::{d2dr2, ddr, first_derivative_row, second_derivative_row, StencilRow};
