//! Closed-form radially symmetric steady state and its residual checks.

use crate::numerics::{d2dr2, ddr, RadialField, RadialGrid};
use crate::params::{
    admissible_outer_radius, validate_constants, validate_params, ModelParams, SteadyStateConstants,
};
use crate::{Error, Result};

/// Radial profiles of density, chemical and the two velocity components.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisymState {
    pub rho: RadialField,
    pub g: RadialField,
    pub v_r: RadialField,
    pub v_theta: RadialField,
}

impl AxisymState {
    pub fn new(
        rho: RadialField,
        g: RadialField,
        v_r: RadialField,
        v_theta: RadialField,
    ) -> Result<Self> {
        let grid = rho.grid();
        if g.grid() != grid || v_r.grid() != grid || v_theta.grid() != grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            rho,
            g,
            v_r,
            v_theta,
        })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        let z = RadialField::zeros(grid);
        Self {
            rho: z.clone(),
            g: z.clone(),
            v_r: z.clone(),
            v_theta: z,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        self.rho.grid()
    }

    pub fn fields(&self) -> [&RadialField; 4] {
        [&self.rho, &self.g, &self.v_r, &self.v_theta]
    }

    pub fn fields_mut(&mut self) -> [&mut RadialField; 4] {
        [&mut self.rho, &mut self.g, &mut self.v_r, &mut self.v_theta]
    }

    /// Concatenation `[rho, g, v_r, v_theta]`, the layout of the perturbation vector.
    pub fn to_vec(&self) -> Vec<f64> {
        self.fields()
            .iter()
            .flat_map(|f| f.values().iter().copied())
            .collect()
    }

    pub fn from_vec(grid: RadialGrid, v: &[f64]) -> Result<Self> {
        let n = grid.len();
        if v.len() != 4 * n {
            return Err(Error::FieldLength {
                expected: 4 * n,
                got: v.len(),
            });
        }
        let field = |k: usize| RadialField::new(grid, v[k * n..(k + 1) * n].to_vec());
        Self::new(field(0)?, field(1)?, field(2)?, field(3)?)
    }

    /// Euclidean distance over all four fields.
    pub fn distance(&self, other: &Self) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.fields()
            .iter()
            .all(|f| f.values().iter().all(|x| x.is_finite()))
    }
}

/// Evaluates the closed-form steady profiles on `grid`.
pub fn eval_steady(
    p: &ModelParams,
    c: &SteadyStateConstants,
    grid: &RadialGrid,
) -> Result<AxisymState> {
    validate_params(p).into_result()?;
    validate_constants(p, c).into_result()?;
    let r_star = admissible_outer_radius(p, c);
    if grid.r_b() >= r_star {
        return Err(Error::Domain {
            r_b: grid.r_b(),
            r_star,
        });
    }
    Ok(steady_profiles(p, c, grid))
}

/// Closed-form profiles without the domain check; used where the boundary of
/// admissibility itself is of interest.
pub fn steady_profiles(
    p: &ModelParams,
    c: &SteadyStateConstants,
    grid: &RadialGrid,
) -> AxisymState {
    let exponent = c.c1 + p.density_scale();
    let scale = p.density_scale();
    let swirl = (p.b * c.c2 * exponent).sqrt();
    let rho = RadialField::from_fn(*grid, |r| scale * (c.c2 * r.powf(-exponent) - 1.0));
    let g = rho.scale(p.lambda);
    let v_theta = RadialField::from_fn(*grid, |r| swirl * r.powf(-0.5 * exponent));
    AxisymState {
        rho,
        g,
        v_r: RadialField::zeros(*grid),
        v_theta,
    }
}

/// Pointwise `beta / (alpha + beta*g)`, failing where the denominator is not positive.
pub(crate) fn sensitivity(p: &ModelParams, g: &RadialField) -> Result<RadialField> {
    for (i, &gi) in g.values().iter().enumerate() {
        let d = p.alpha + p.beta * gi;
        if !(d > 0.0) {
            return Err(Error::Denominator { node: i, value: d });
        }
    }
    Ok(g.map(|_, gi| p.beta / (p.alpha + p.beta * gi)))
}

/// Polar divergence `(1/r) d/dr [ r (D drho/dr - rho*chi(g) dg/dr) ]`, expanded as
/// `D (rho'' + rho'/r) - (rho chi)' g' - rho chi (g'' + g'/r)` so only compact
/// stencils appear.
pub(crate) fn density_divergence(
    p: &ModelParams,
    diffusion: f64,
    rho: &RadialField,
    g: &RadialField,
) -> Result<RadialField> {
    let chi = sensitivity(p, g)?;
    let grid = *rho.grid();
    let rho_r = ddr(rho);
    let rho_rr = d2dr2(rho);
    let g_r = ddr(g);
    let g_rr = d2dr2(g);
    let carried = RadialField::new(
        grid,
        rho.values()
            .iter()
            .zip(chi.values())
            .map(|(a, b)| a * b)
            .collect(),
    )?;
    let carried_r = ddr(&carried);
    let out = (0..grid.len())
        .map(|i| {
            let r = grid.node(i);
            diffusion * (rho_rr[i] + rho_r[i] / r)
                - carried_r[i] * g_r[i]
                - carried[i] * (g_rr[i] + g_r[i] / r)
        })
        .collect();
    RadialField::new(grid, out)
}

/// Residuals of the three steady equations.
#[derive(Debug, Clone)]
pub struct SteadyResidual {
    /// Polar divergence of the radial flux.
    pub mass: RadialField,
    /// `lambda*rho - g`.
    pub chemical: RadialField,
    /// `v_theta^2 + b r dg/dr`.
    pub momentum: RadialField,
}

pub fn steady_residual(p: &ModelParams, s: &AxisymState) -> Result<SteadyResidual> {
    let grid = *s.grid();
    let mass = density_divergence(p, 1.0, &s.rho, &s.g)?;
    let chemical = s.rho.axpby(p.lambda, &s.g, -1.0);
    let g_r = ddr(&s.g);
    let momentum = RadialField::new(
        grid,
        (0..grid.len())
            .map(|i| s.v_theta[i] * s.v_theta[i] + p.b * grid.node(i) * g_r[i])
            .collect(),
    )?;
    Ok(SteadyResidual {
        mass,
        chemical,
        momentum,
    })
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// `max |g - lambda*rho|` over all nodes.
    pub chemical_deviation: f64,
    /// `r (drho/dr - rho*chi*dg/dr)` at every node.
    pub flux: RadialField,
    pub flux_mean: f64,
    /// Largest interior deviation of the flux from its interior mean.
    pub flux_max_deviation: f64,
    /// Interior standard deviation divided by `|mean|`.
    pub flux_relative_std: f64,
    /// `max |v_theta^2 + b r dg/dr|` over interior nodes.
    pub momentum_deviation: f64,
    /// Interior maximum of `|v_theta^2 + b r dg/dr| / v_theta^2`.
    pub momentum_relative: f64,
}

pub fn check_identities(p: &ModelParams, s: &AxisymState) -> Result<IdentityReport> {
    let grid = *s.grid();
    let chemical_deviation = s.g.axpby(1.0, &s.rho, -p.lambda).max_abs();
    let chi = sensitivity(p, &s.g)?;
    let rho_r = ddr(&s.rho);
    let g_r = ddr(&s.g);
    let flux = RadialField::new(
        grid,
        (0..grid.len())
            .map(|i| grid.node(i) * (rho_r[i] - s.rho[i] * chi[i] * g_r[i]))
            .collect(),
    )?;
    let inner = &flux.values()[grid.interior()];
    let m = inner.len() as f64;
    let flux_mean = inner.iter().sum::<f64>() / m;
    let flux_max_deviation = inner
        .iter()
        .map(|x| (x - flux_mean).abs())
        .fold(0.0, f64::max);
    let std = (inner.iter().map(|x| (x - flux_mean).powi(2)).sum::<f64>() / m).sqrt();
    let flux_relative_std = std / flux_mean.abs();

    let residual = steady_residual(p, s)?;
    let momentum_deviation = residual.momentum.max_abs_interior();
    let momentum_relative = grid
        .interior()
        .map(|i| residual.momentum[i].abs() / (s.v_theta[i] * s.v_theta[i]))
        .fold(0.0, f64::max);

    Ok(IdentityReport {
        chemical_deviation,
        flux,
        flux_mean,
        flux_max_deviation,
        flux_relative_std,
        momentum_deviation,
        momentum_relative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 1.0)
    }

    fn reference(n: usize) -> (ModelParams, AxisymState) {
        let p = unit();
        let c = SteadyStateConstants::new(&p, 0.5, 2.0);
        let r_b = 0.9 * admissible_outer_radius(&p, &c);
        let grid = RadialGrid::new(0.5, r_b, n).unwrap();
        (p, eval_steady(&p, &c, &grid).unwrap())
    }

    #[test]
    fn hand_values_at_unit_radius() {
        let p = unit();
        let c = SteadyStateConstants::new(&p, 0.5, 2.0);
        let grid = RadialGrid::new(0.25, 1.0, 4).unwrap();
        let s = eval_steady(&p, &c, &grid).unwrap();
        assert!((s.rho[3] - 1.0).abs() < 1e-14);
        assert!((s.g[3] - 1.0).abs() < 1e-14);
        assert!((s.v_theta[3] - 3f64.sqrt()).abs() < 1e-14);
        assert!((s.v_theta[0] - 3f64.sqrt() * 0.25f64.powf(-0.75)).abs() < 1e-13);
        assert!((s.v_theta[0] - 4.8990).abs() < 1e-4);
        assert!(s.v_r.max_abs() == 0.0);
    }

    #[test]
    fn boundary_of_admissibility() {
        let p = unit();
        let c = SteadyStateConstants::new(&p, 0.0, 1.0);
        let grid = RadialGrid::new(0.5, 1.0, 3).unwrap();
        let s = steady_profiles(&p, &c, &grid);
        assert_eq!(s.rho[2], 0.0);
        assert_eq!(s.g[2], 0.0);
        assert!(matches!(
            eval_steady(&p, &c, &grid),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn invalid_constants_rejected() {
        let p = unit();
        let c = SteadyStateConstants::new(&p, 0.5, -1.0);
        let grid = RadialGrid::new(0.5, 1.0, 5).unwrap();
        assert!(matches!(
            eval_steady(&p, &c, &grid),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn profiles_positive_and_decreasing() {
        let (p, s) = reference(129);
        assert_eq!(s.g, s.rho.scale(p.lambda));
        for f in [&s.rho, &s.g, &s.v_theta] {
            assert!(f.min() > 0.0);
            for w in f.values().windows(2) {
                assert!(w[1] < w[0]);
            }
        }
        // b * dg/dr <= 0: the swirl speed is real.
        assert!(ddr(&s.g).values().iter().all(|&d| p.b * d <= 0.0));
    }

    #[test]
    fn exact_state_has_small_residual() {
        let (p, s) = reference(257);
        let res = steady_residual(&p, &s).unwrap();
        assert!(res.chemical.max_abs() <= 1e-12);
        let dr2 = s.grid().dr().powi(2);
        assert!(res.mass.max_abs_interior() < 50.0 * dr2);
        assert!(res.momentum.max_abs_interior() < 50.0 * dr2);
    }

    #[test]
    fn residual_is_second_order() {
        let (p, coarse) = reference(129);
        let (_, fine) = reference(257);
        let a = steady_residual(&p, &coarse).unwrap();
        let b = steady_residual(&p, &fine).unwrap();
        let ratio = a.mass.max_abs_interior() / b.mass.max_abs_interior();
        assert!(ratio > 3.5, "mass ratio {ratio}");
        let ratio = a.momentum.max_abs_interior() / b.momentum.max_abs_interior();
        assert!(ratio > 3.5, "momentum ratio {ratio}");
    }

    #[test]
    fn uniform_state_is_exact() {
        let p = ModelParams::new(1.3, 0.7, 2.0, 1.0);
        let grid = RadialGrid::new(0.5, 1.5, 21).unwrap();
        let rho = RadialField::from_fn(grid, |_| 0.8);
        let s = AxisymState::new(
            rho.clone(),
            rho.scale(p.lambda),
            RadialField::zeros(grid),
            RadialField::zeros(grid),
        )
        .unwrap();
        let res = steady_residual(&p, &s).unwrap();
        assert!(res.mass.max_abs() < 1e-12);
        assert!(res.chemical.max_abs() < 1e-15);
        assert!(res.momentum.max_abs() < 1e-12);
    }

    #[test]
    fn identities_hold_for_exact_state() {
        let (p, s) = reference(257);
        let rep = check_identities(&p, &s).unwrap();
        assert_eq!(rep.chemical_deviation, 0.0);
        assert!(rep.flux_relative_std < 1e-3);
        assert!(rep.momentum_relative < 1e-3);
        // Analytic flux is -alpha*p/(beta*lambda) = -1.5 here.
        assert!((rep.flux_mean.abs() - 1.5).abs() < 1e-3);
    }

    #[test]
    fn scaled_chemical_is_detected() {
        let (p, s) = reference(65);
        let mut bad = s.clone();
        bad.g = s.g.scale(2.0);
        let rep = check_identities(&p, &bad).unwrap();
        let expected = s.rho.scale(p.lambda).max_abs();
        assert!((rep.chemical_deviation - expected).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_denominator_guarded() {
        let p = unit();
        let grid = RadialGrid::new(0.5, 1.0, 5).unwrap();
        let g = RadialField::from_fn(grid, |_| -2.0);
        let s = AxisymState::new(
            g.clone(),
            g,
            RadialField::zeros(grid),
            RadialField::zeros(grid),
        )
        .unwrap();
        assert!(matches!(
            steady_residual(&p, &s),
            Err(Error::Denominator { node: 0, .. })
        ));
    }
}
