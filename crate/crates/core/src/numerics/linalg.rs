//! Dense complex matrices and the handful of decompositions the analyses need.
//!
//! Schur, SVD and LU come from `nalgebra`; this module owns the row-major
//! storage, the error reporting and the norms.

use nalgebra::linalg::{Schur, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MAX_SWEEPS_PER_ROW: usize = 2000;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Spectral norm, the largest singular value.
    Two,
    /// Maximum absolute row sum.
    Inf,
    Frobenius,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Invalid(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Invalid("ragged rows".into()));
        }
        let entries = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Ok(Self {
            rows: r,
            cols: c,
            entries,
        })
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "dimension mismatch in mat-vec");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&x| x * k).collect(),
        }
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, other: &Self, k: Complex64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + k * b)
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Principal submatrix on the given (sorted or not) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut out = Self::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries)
    }

    fn check_finite(&self) -> Result<()> {
        if self
            .entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            Ok(())
        } else {
            Err(Error::Invalid("matrix has non-finite entries".into()))
        }
    }

    fn singular_values(&self) -> Result<Vec<f64>> {
        self.check_finite()?;
        if self.rows == 0 || self.cols == 0 {
            return Ok(Vec::new());
        }
        let max_iter = MAX_SWEEPS_PER_ROW * self.rows.max(self.cols);
        let svd = SVD::try_new(self.to_nalgebra(), false, false, f64::EPSILON, max_iter)
            .ok_or(Error::NoConvergence("singular value decomposition"))?;
        Ok(svd.singular_values.iter().copied().collect())
    }

    /// All eigenvalues, via a complex Schur decomposition.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        self.check_finite()?;
        if self.rows == 0 {
            return Ok(Vec::new());
        }
        let max_iter = MAX_SWEEPS_PER_ROW * self.rows;
        let schur = Schur::try_new(self.to_nalgebra(), f64::EPSILON, max_iter)
            .ok_or(Error::NoConvergence("eigenvalue solver"))?;
        let eig = schur
            .eigenvalues()
            .ok_or(Error::NoConvergence("eigenvalue solver"))?;
        Ok(eig.iter().copied().collect())
    }

    pub fn min_singular_value(&self) -> Result<f64> {
        let sv = self.singular_values()?;
        if sv.is_empty() {
            return Ok(0.0);
        }
        Ok(sv.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn op_norm(&self, kind: NormKind) -> Result<f64> {
        Ok(match kind {
            NormKind::Two => self.singular_values()?.into_iter().fold(0.0, f64::max),
            NormKind::Inf => (0..self.rows)
                .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            NormKind::Frobenius => self
                .entries
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt(),
        })
    }

    /// Eigenvector for an eigenvalue estimate `shift`, by inverse iteration.
    /// Returned with unit Euclidean norm.
    pub fn eigenvector(&self, shift: Complex64) -> Result<Vec<Complex64>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        // Nudge off the exact eigenvalue so the shifted matrix stays invertible.
        let nudge = 1e-10 * (1.0 + shift.norm());
        let mut shifted = self.to_nalgebra();
        for i in 0..n {
            shifted[(i, i)] -= shift + Complex64::new(nudge, nudge);
        }
        let lu = shifted.lu();
        let mut x = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.3));
        for _ in 0..8 {
            x = lu
                .solve(&x)
                .ok_or(Error::NoConvergence("inverse iteration"))?;
            let norm = x.norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::NoConvergence("inverse iteration"));
            }
            x /= Complex64::new(norm, 0.0);
        }
        Ok(x.iter().copied().collect())
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}
