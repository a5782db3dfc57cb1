//! Linear stability of the rotating steady state.
//!
//! Perturbations take the modal form `w(r) exp(s t + i n theta)` for the four
//! fields. The assembled matrix `M` is the Jacobian of the discrete radial
//! right-hand side at `n = 0`, with the azimuthal terms added for `n != 0`.
//! Perturbations vanish at both boundary nodes, so boundary rows are zero and
//! spectra are taken on the interior unknowns only.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::evolve::rhs;
use crate::numerics::{
    d2dr2, ddr, first_derivative_row, second_derivative_row, DenseMatrix, NormKind, RadialField,
    RadialGrid,
};
use crate::params::{validate_constants, ModelParams, SteadyStateConstants};
use crate::steady::{eval_steady, AxisymState};
use crate::{Error, Result};

const VERDICT_TOL: f64 = 1e-10;

/// The two chemotactic coefficient profiles `beta/(alpha+beta g)` and
/// `beta^2/(alpha+beta g)^2`.
pub fn linearize_chemo_coeff(
    g0: &RadialField,
    p: &ModelParams,
) -> Result<(RadialField, RadialField)> {
    for (i, &g) in g0.values().iter().enumerate() {
        let d = p.alpha + p.beta * g;
        if !(d > 0.0) {
            return Err(Error::Denominator { node: i, value: d });
        }
    }
    let chi = g0.map(|_, g| p.beta / (p.alpha + p.beta * g));
    let chi_sq = g0.map(|_, g| (p.beta / (p.alpha + p.beta * g)).powi(2));
    Ok((chi, chi_sq))
}

/// Chemical profile slaved to a density profile: `G = lambda F / (s + 1)`.
pub fn g_from_rho(
    f: &RadialField<Complex64>,
    s: Complex64,
    p: &ModelParams,
) -> Result<RadialField<Complex64>> {
    let denom = s + 1.0;
    if denom.norm() <= f64::EPSILON {
        return Err(Error::ChemicalPole);
    }
    let k = p.lambda / denom;
    Ok(f.map(|_, v| v * k))
}

/// Local data needed to solve the two momentum equations at one node.
#[derive(Debug, Clone, Copy)]
pub struct VelocityNode {
    pub r: f64,
    pub v_theta: f64,
    pub dv_theta: f64,
    pub g: Complex64,
    pub dg: Complex64,
}

/// Modal velocity amplitudes `(H_r, H_theta)` forced by a chemical profile at
/// one node. With `w = s + i n v/r` the momentum equations read
///
/// ```text
/// w H_r - (2v/r) H_theta       = b G'
/// (v' + v/r) H_r + w H_theta   = i n b G / r
/// ```
///
/// and are solved directly. Returns `None` when the determinant vanishes.
pub fn velocities_at(
    node: VelocityNode,
    s: Complex64,
    n: i32,
    b: f64,
) -> Option<(Complex64, Complex64)> {
    let VelocityNode {
        r,
        v_theta: v,
        dv_theta: dv,
        g,
        dg,
    } = node;
    let w = s + Complex64::new(0.0, n as f64 * v / r);
    let a = 2.0 * v / r;
    let c = dv + v / r;
    let det = w * w + a * c;
    if det.norm() <= f64::EPSILON * (1.0 + (w * w).norm() + (a * c).abs()) {
        return None;
    }
    let forcing_r = dg * b;
    let forcing_t = Complex64::new(0.0, n as f64 * b / r) * g;
    let h_r = (w * forcing_r + forcing_t * a) / det;
    let h_t = (w * forcing_t - forcing_r * c) / det;
    Some((h_r, h_t))
}

/// Velocity profiles of a mode whose density profile is `F`.
pub fn perturbation_velocities(
    f: &RadialField<Complex64>,
    steady: &AxisymState,
    p: &ModelParams,
    s: Complex64,
    n: i32,
) -> Result<(RadialField<Complex64>, RadialField<Complex64>)> {
    let grid = *steady.grid();
    if f.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let g = g_from_rho(f, s, p)?;
    let dg = ddr(&g);
    let dv = ddr(&steady.v_theta);
    let mut h_r = Vec::with_capacity(grid.len());
    let mut h_t = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let node = VelocityNode {
            r: grid.node(i),
            v_theta: steady.v_theta[i],
            dv_theta: dv[i],
            g: g[i],
            dg: dg[i],
        };
        let (a, b) = velocities_at(node, s, n, p.b).ok_or(Error::SingularVelocity { node: i })?;
        h_r.push(a);
        h_t.push(b);
    }
    Ok((RadialField::new(grid, h_r)?, RadialField::new(grid, h_t)?))
}

/// Square operator `M` with the indices of its free (non-pinned) unknowns.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub matrix: DenseMatrix,
    pub n: i32,
    grid: Option<RadialGrid>,
    free: Vec<usize>,
}

impl LinearOperator {
    /// Wraps an arbitrary square matrix; every unknown is free.
    pub fn from_matrix(matrix: DenseMatrix, n: i32) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let free = (0..matrix.rows()).collect();
        Ok(Self {
            matrix,
            n,
            grid: None,
            free,
        })
    }

    pub fn grid(&self) -> Option<&RadialGrid> {
        self.grid.as_ref()
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// Restriction of `M` to the free unknowns.
    pub fn reduced(&self) -> DenseMatrix {
        if self.free.len() == self.matrix.rows() {
            self.matrix.clone()
        } else {
            self.matrix.principal_submatrix(&self.free)
        }
    }
}

/// Builds `M` for azimuthal wavenumber `n`, with block order
/// `[rho, g, v_r, v_theta]`.
pub fn assemble_operator(p: &ModelParams, steady: &AxisymState, n: i32) -> Result<LinearOperator> {
    let grid = *steady.grid();
    let nn = grid.len();
    let (chi, chi_sq) = linearize_chemo_coeff(&steady.g, p)?;
    let rho = steady.rho.values();
    let vr = steady.v_r.values();
    let vt = steady.v_theta.values();

    let g_r = ddr(&steady.g);
    let g_rr = d2dr2(&steady.g);
    let rho_r = ddr(&steady.rho);
    let vr_r = ddr(&steady.v_r);
    let vt_r = ddr(&steady.v_theta);
    let carried = RadialField::new(grid, (0..nn).map(|i| rho[i] * chi[i]).collect())?;
    let carried_r = ddr(&carried);

    let kn = n as f64;
    let i_unit = Complex64::new(0.0, 1.0);
    let d = p.diffusion;
    let mut m = DenseMatrix::zeros(4 * nn, 4 * nn);
    let (rr, gg, vv, tt) = (0, nn, 2 * nn, 3 * nn);

    for i in grid.interior() {
        let r = grid.node(i);
        let lap_g = g_rr[i] + g_r[i] / r;
        // d(chi)/dg = -beta^2/(alpha+beta g)^2
        let dchi = |k: usize| -chi_sq[k];
        let advect = -i_unit * (kn * vt[i] / r);

        for (k, w1) in first_derivative_row(&grid, i).weights() {
            m[(rr + i, rr + k)] += -g_r[i] * w1 * chi[k] - vr[i] * w1 + d * w1 / r;
            m[(rr + i, gg + k)] +=
                -g_r[i] * w1 * rho[k] * dchi(k) - carried_r[i] * w1 - carried[i] * w1 / r;
            m[(vv + i, gg + k)] += p.b * w1;
            m[(vv + i, vv + k)] += -vr[i] * w1;
            m[(tt + i, tt + k)] += -vr[i] * w1;
        }
        for (k, w2) in second_derivative_row(&grid, i).weights() {
            m[(rr + i, rr + k)] += d * w2;
            m[(rr + i, gg + k)] += -carried[i] * w2;
        }

        m[(rr + i, rr + i)] += advect + (-chi[i] * lap_g - d * kn * kn / (r * r));
        m[(rr + i, gg + i)] += -rho[i] * dchi(i) * lap_g + kn * kn * carried[i] / (r * r);
        m[(rr + i, vv + i)] += -rho_r[i];

        m[(gg + i, rr + i)] = Complex64::from(p.lambda);
        m[(gg + i, gg + i)] = Complex64::from(-1.0);

        m[(vv + i, vv + i)] += advect - vr_r[i];
        m[(vv + i, tt + i)] += 2.0 * vt[i] / r;

        m[(tt + i, gg + i)] += i_unit * (kn * p.b / r);
        m[(tt + i, vv + i)] += -(vt_r[i] + vt[i] / r);
        m[(tt + i, tt + i)] += advect - vr[i] / r;
    }

    let free = (0..4)
        .flat_map(|block| grid.interior().map(move |i| block * nn + i))
        .collect();
    Ok(LinearOperator {
        matrix: m,
        n,
        grid: Some(grid),
        free,
    })
}

/// Relative mismatch `||M d - FD(d)|| / ||M d||` between the `n = 0`
/// operator and a central difference of the nonlinear right-hand side, for
/// `count` random interior directions drawn from a seeded generator.
pub fn linearization_errors(
    p: &ModelParams,
    steady: &AxisymState,
    seed: u64,
    count: usize,
    eps: f64,
) -> Result<Vec<f64>> {
    let op = assemble_operator(p, steady, 0)?;
    let grid = *steady.grid();
    let base = steady.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut delta = vec![0.0; base.len()];
        for &i in op.free_indices() {
            delta[i] = rng.random_range(-1.0..1.0);
        }
        let at = |sign: f64| -> Result<Vec<f64>> {
            let v: Vec<f64> = base
                .iter()
                .zip(&delta)
                .map(|(a, d)| a + sign * eps * d)
                .collect();
            Ok(rhs(&AxisymState::from_vec(grid, &v)?, p)?.to_vec())
        };
        let (plus, minus) = (at(1.0)?, at(-1.0)?);
        let md = op.matrix.mul_vec(
            &delta
                .iter()
                .map(|&x| Complex64::from(x))
                .collect::<Vec<_>>(),
        );
        let (mut num, mut den) = (0.0, 0.0);
        for &i in op.free_indices() {
            let fd = (plus[i] - minus[i]) / (2.0 * eps);
            num += (md[i] - fd).norm_sqr();
            den += md[i].norm_sqr();
        }
        out.push((num / den).sqrt());
    }
    Ok(out)
}

fn by_descending_real(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
}

/// Eigenvalues of `M` on the free unknowns, largest real part first.
pub fn growth_spectrum(l: &LinearOperator) -> Result<Vec<Complex64>> {
    let mut eig = l.reduced().eigenvalues()?;
    eig.sort_by(by_descending_real);
    Ok(eig)
}

/// Modal profiles of one eigenpair.
#[derive(Debug, Clone)]
pub struct PerturbationMode {
    pub n: i32,
    pub s: Complex64,
    pub f: RadialField<Complex64>,
    pub g: RadialField<Complex64>,
    pub h_r: RadialField<Complex64>,
    pub h_theta: RadialField<Complex64>,
}

/// The fastest-growing mode of an assembled operator, with the eigenvector
/// scaled to unit Euclidean norm.
pub fn leading_mode(l: &LinearOperator) -> Result<PerturbationMode> {
    let grid = *l
        .grid()
        .ok_or_else(|| Error::Invalid("operator has no radial grid".into()))?;
    let s = *growth_spectrum(l)?
        .first()
        .ok_or_else(|| Error::Invalid("empty operator".into()))?;
    let reduced_vec = l.reduced().eigenvector(s)?;
    let nn = grid.len();
    let mut full = vec![Complex64::new(0.0, 0.0); 4 * nn];
    for (&idx, &v) in l.free_indices().iter().zip(&reduced_vec) {
        full[idx] = v;
    }
    let field = |block: usize| RadialField::new(grid, full[block * nn..(block + 1) * nn].to_vec());
    Ok(PerturbationMode {
        n: l.n,
        s,
        f: field(0)?,
        g: field(1)?,
        h_r: field(2)?,
        h_theta: field(3)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn from_growth(max_re: f64) -> Self {
        if max_re < -VERDICT_TOL {
            Verdict::Stable
        } else if max_re > VERDICT_TOL {
            Verdict::Unstable
        } else {
            Verdict::Marginal
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n: i32,
    pub dt: f64,
    /// `||I - dt M||_2`, kept for comparison with the backward-step heuristic.
    pub norm_i_minus_dt_m: f64,
    /// Spectral radius of the forward-Euler amplification `I + dt M`.
    pub spectral_radius_forward: f64,
    pub max_re_eig: f64,
    pub verdict: Verdict,
}

/// Amplification diagnostics at step `dt`. The verdict follows the sign of
/// the leading growth rate.
pub fn amplification_report(l: &LinearOperator, dt: f64) -> Result<StabilityReport> {
    let eig = growth_spectrum(l)?;
    report_from_spectrum(l, &eig, dt)
}

fn report_from_spectrum(l: &LinearOperator, eig: &[Complex64], dt: f64) -> Result<StabilityReport> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    let m = l.reduced();
    let backward = DenseMatrix::identity(m.rows()).add_scaled(&m, (-dt).into());
    let norm = backward.op_norm(NormKind::Two)?;
    let radius = eig
        .iter()
        .map(|z| (Complex64::new(1.0, 0.0) + z * dt).norm())
        .fold(0.0, f64::max);
    let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        n: l.n,
        dt,
        norm_i_minus_dt_m: norm,
        spectral_radius_forward: radius,
        max_re_eig: max_re,
        verdict: Verdict::from_growth(max_re),
    })
}

/// Result of one `(b, n)` cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub spectrum: Vec<Complex64>,
    pub report: StabilityReport,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub b: f64,
    pub n: i32,
    pub outcome: std::result::Result<SweepCell, String>,
}

impl SweepRow {
    pub fn max_re_eig(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|c| c.report.max_re_eig)
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.outcome.as_ref().ok().map(|c| c.report.verdict)
    }
}

fn sweep_cell(
    template: &ModelParams,
    c1: f64,
    c2: f64,
    grid: &RadialGrid,
    b: f64,
    n: i32,
    dt: f64,
) -> Result<SweepCell> {
    let p = template.with_b(b);
    let c = SteadyStateConstants::new(&p, c1, c2);
    let steady = eval_steady(&p, &c, grid)?;
    let op = assemble_operator(&p, &steady, n)?;
    let spectrum = growth_spectrum(&op)?;
    let report = report_from_spectrum(&op, &spectrum, dt)?;
    Ok(SweepCell { spectrum, report })
}

/// Leading growth rates over a grid of `b` and `n`. Cells are independent and
/// run on the current rayon pool; rows come back sorted by `(b, n)`.
/// A failing cell records its error and the sweep continues.
pub fn sweep_b(
    template: &ModelParams,
    c: &SteadyStateConstants,
    grid: &RadialGrid,
    b_values: &[f64],
    n_values: &[i32],
    dt: f64,
) -> Result<Vec<SweepRow>> {
    validate_constants(template, c).into_result()?;
    let cells: Vec<(f64, i32)> = b_values
        .iter()
        .flat_map(|&b| n_values.iter().map(move |&n| (b, n)))
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .into_par_iter()
        .map(|(b, n)| SweepRow {
            b,
            n,
            outcome: sweep_cell(template, c.c1, c.c2, grid, b, n, dt).map_err(|e| e.to_string()),
        })
        .collect();
    rows.sort_by(|x, y| x.b.total_cmp(&y.b).then(x.n.cmp(&y.n)));
    Ok(rows)
}
