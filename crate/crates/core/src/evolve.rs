//! Explicit time integration of the nonlinear axisymmetric system.
//!
//! ```text
//! d(rho)/dt     = (1/r) d/dr [ r (D rho_r - rho chi(g) g_r) ] - v_r rho_r
//! d(g)/dt       = lambda rho - g
//! d(v_r)/dt     = -v_r (v_r)_r + v_theta^2 / r + b g_r
//! d(v_theta)/dt = -v_r (v_theta)_r - v_r v_theta / r
//! ```
//!
//! All four fields are pinned to their initial values at `r_a` and `r_b`.

use serde::{Deserialize, Serialize};

use crate::numerics::{ddr, RadialField};
use crate::params::ModelParams;
use crate::steady::{density_divergence, AxisymState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Accept `dt` above the `dr^2/(4D)` guard.
    #[serde(default)]
    pub allow_cfl_violation: bool,
    /// Keep a copy of the state at every recorded step.
    #[serde(default)]
    pub keep_snapshots: bool,
    /// Hold the density fixed (test hook for the chemical relaxation).
    #[serde(default)]
    pub freeze_density: bool,
}

fn one() -> usize {
    1
}

impl EvolveConfig {
    pub fn new(dt: f64, n_steps: usize, scheme: Scheme) -> Self {
        Self {
            dt,
            n_steps,
            scheme,
            record_every: 1,
            allow_cfl_violation: false,
            keep_snapshots: false,
            freeze_density: false,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Invalid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.n_steps == 0 || self.record_every == 0 {
            return Err(Error::Invalid(
                "n_steps and record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Largest admissible explicit step, `dr^2 / (4 D)`.
pub fn cfl_limit(p: &ModelParams, state: &AxisymState) -> f64 {
    let dr = state.grid().dr();
    dr * dr / (4.0 * p.diffusion)
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub deviation_norms: Vec<f64>,
    pub blowup_flags: Vec<bool>,
    pub snapshots: Option<Vec<AxisymState>>,
}

impl Trajectory {
    pub fn blew_up(&self) -> bool {
        self.blowup_flags.last().copied().unwrap_or(false)
    }

    pub fn final_state(&self) -> Option<&AxisymState> {
        self.snapshots.as_ref().and_then(|s| s.last())
    }
}

/// Time derivatives of the four fields.
pub fn rhs(s: &AxisymState, p: &ModelParams) -> Result<AxisymState> {
    rhs_impl(s, p, false)
}

fn rhs_impl(s: &AxisymState, p: &ModelParams, freeze_density: bool) -> Result<AxisymState> {
    let grid = *s.grid();
    let n = grid.len();
    let vr = s.v_r.values();
    let vt = s.v_theta.values();

    let rho_t = if freeze_density {
        RadialField::zeros(grid)
    } else {
        let div = density_divergence(p, p.diffusion, &s.rho, &s.g)?;
        let rho_r = ddr(&s.rho);
        RadialField::new(grid, (0..n).map(|i| div[i] - vr[i] * rho_r[i]).collect())?
    };
    let g_t = s.rho.axpby(p.lambda, &s.g, -1.0);

    let g_r = ddr(&s.g);
    let vr_r = ddr(&s.v_r);
    let vt_r = ddr(&s.v_theta);
    let mut vr_t = Vec::with_capacity(n);
    let mut vt_t = Vec::with_capacity(n);
    for i in 0..n {
        let r = grid.node(i);
        vr_t.push(-vr[i] * vr_r[i] + vt[i] * vt[i] / r + p.b * g_r[i]);
        vt_t.push(-vr[i] * vt_r[i] - vr[i] * vt[i] / r);
    }
    AxisymState::new(
        rho_t,
        g_t,
        RadialField::new(grid, vr_t)?,
        RadialField::new(grid, vt_t)?,
    )
}

/// `base + h * k` on interior nodes; boundary nodes copied from `base`.
fn offset(base: &AxisymState, k: &AxisymState, h: f64) -> AxisymState {
    let mut out = base.clone();
    let n = base.grid().len();
    for (dst, src) in out.fields_mut().into_iter().zip(k.fields()) {
        let d = dst.values_mut();
        for i in 1..n - 1 {
            d[i] += h * src[i];
        }
    }
    out
}

fn combine(base: &AxisymState, ks: &[(&AxisymState, f64)]) -> AxisymState {
    let mut out = base.clone();
    let n = base.grid().len();
    for (f, dst) in out.fields_mut().into_iter().enumerate() {
        for (i, d) in dst.values_mut().iter_mut().enumerate().take(n - 1).skip(1) {
            *d += ks.iter().map(|(k, w)| w * k.fields()[f][i]).sum::<f64>();
        }
    }
    out
}

fn advance(
    s: &AxisymState,
    p: &ModelParams,
    cfg: &EvolveConfig,
    step_index: usize,
) -> Result<AxisymState> {
    let dt = cfg.dt;
    // A vanishing sensitivity denominator mid-run is a breakdown of the
    // trajectory, not a bad input, so it is reported as a blow-up.
    let f = |x: &AxisymState| {
        rhs_impl(x, p, cfg.freeze_density).map_err(|e| match e {
            Error::Denominator { .. } => Error::BlowUp { step: step_index },
            e => e,
        })
    };
    let next = match cfg.scheme {
        Scheme::Euler => {
            let k1 = f(s)?;
            offset(s, &k1, dt)
        }
        Scheme::Rk4 => {
            let k1 = f(s)?;
            let k2 = f(&offset(s, &k1, 0.5 * dt))?;
            let k3 = f(&offset(s, &k2, 0.5 * dt))?;
            let k4 = f(&offset(s, &k3, dt))?;
            let w = dt / 6.0;
            combine(s, &[(&k1, w), (&k2, 2.0 * w), (&k3, 2.0 * w), (&k4, w)])
        }
    };
    if !next.is_finite() {
        return Err(Error::BlowUp { step: step_index });
    }
    Ok(next)
}

fn guard(s: &AxisymState, p: &ModelParams, cfg: &EvolveConfig) -> Result<()> {
    cfg.check()?;
    let limit = cfl_limit(p, s);
    if cfg.dt > limit && !cfg.allow_cfl_violation {
        return Err(Error::Cfl { dt: cfg.dt, limit });
    }
    Ok(())
}

/// One explicit step. Boundary nodes keep their incoming values.
pub fn step(s: &AxisymState, p: &ModelParams, cfg: &EvolveConfig) -> Result<AxisymState> {
    guard(s, p, cfg)?;
    advance(s, p, cfg, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationShape {
    /// Smooth compactly supported bump centred on the middle node, peak 1.
    Bump,
    /// `sin(pi (r - r_a)/(r_b - r_a))`.
    Mode0Sine,
}

pub fn perturbation_profile(
    grid: &crate::numerics::RadialGrid,
    shape: PerturbationShape,
) -> RadialField {
    let (r_a, r_b) = (grid.r_a(), grid.r_b());
    let n = grid.len();
    let mut f = match shape {
        PerturbationShape::Bump => {
            let centre = grid.node((n - 1) / 2);
            let half_width = 0.25 * (r_b - r_a);
            RadialField::from_fn(*grid, |r| {
                let x = (r - centre) / half_width;
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            })
        }
        PerturbationShape::Mode0Sine => RadialField::from_fn(*grid, |r| {
            (std::f64::consts::PI * (r - r_a) / (r_b - r_a)).sin()
        }),
    };
    let v = f.values_mut();
    v[0] = 0.0;
    v[n - 1] = 0.0;
    f
}

/// Adds `amplitude * profile` to the density.
pub fn add_perturbation(
    s: &AxisymState,
    amplitude: f64,
    shape: PerturbationShape,
) -> Result<AxisymState> {
    let limit = 0.1 * s.rho.min();
    if !(amplitude.abs() < limit) {
        return Err(Error::Amplitude { amplitude, limit });
    }
    let profile = perturbation_profile(s.grid(), shape);
    let mut out = s.clone();
    out.rho = s.rho.axpby(1.0, &profile, amplitude);
    Ok(out)
}

/// Repeated stepping with deviation norms recorded against `reference`.
/// A blow-up ends the run and is flagged on the last record.
pub fn evolve(
    s: &AxisymState,
    p: &ModelParams,
    cfg: &EvolveConfig,
    reference: &AxisymState,
) -> Result<Trajectory> {
    guard(s, p, cfg)?;
    if reference.grid() != s.grid() {
        return Err(Error::GridMismatch);
    }
    let mut traj = Trajectory {
        snapshots: cfg.keep_snapshots.then(Vec::new),
        ..Default::default()
    };
    let record = |traj: &mut Trajectory, t: f64, state: &AxisymState| {
        traj.times.push(t);
        traj.deviation_norms.push(state.distance(reference));
        traj.blowup_flags.push(false);
        if let Some(snaps) = traj.snapshots.as_mut() {
            snaps.push(state.clone());
        }
    };
    record(&mut traj, 0.0, s);
    let mut state = s.clone();
    for k in 1..=cfg.n_steps {
        let t = k as f64 * cfg.dt;
        match advance(&state, p, cfg, k) {
            Ok(next) => state = next,
            Err(Error::BlowUp { .. }) => {
                traj.times.push(t);
                traj.deviation_norms.push(f64::INFINITY);
                traj.blowup_flags.push(true);
                return Ok(traj);
            }
            Err(e) => return Err(e),
        }
        if k % cfg.record_every == 0 || k == cfg.n_steps {
            record(&mut traj, t, &state);
        }
    }
    Ok(traj)
}

/// Evolves `perturbed` and `base` side by side and records the distance
/// between them. Truncation drift common to both runs cancels, leaving the
/// evolution of the perturbation itself.
pub fn evolve_pair(
    perturbed: &AxisymState,
    base: &AxisymState,
    p: &ModelParams,
    cfg: &EvolveConfig,
) -> Result<Trajectory> {
    guard(perturbed, p, cfg)?;
    if base.grid() != perturbed.grid() {
        return Err(Error::GridMismatch);
    }
    let mut traj = Trajectory::default();
    let (mut a, mut b) = (perturbed.clone(), base.clone());
    traj.times.push(0.0);
    traj.deviation_norms.push(a.distance(&b));
    traj.blowup_flags.push(false);
    for k in 1..=cfg.n_steps {
        let t = k as f64 * cfg.dt;
        match advance(&a, p, cfg, k).and_then(|x| Ok((x, advance(&b, p, cfg, k)?))) {
            Ok((x, y)) => (a, b) = (x, y),
            Err(Error::BlowUp { .. }) => {
                traj.times.push(t);
                traj.deviation_norms.push(f64::INFINITY);
                traj.blowup_flags.push(true);
                return Ok(traj);
            }
            Err(e) => return Err(e),
        }
        if k % cfg.record_every == 0 || k == cfg.n_steps {
            traj.times.push(t);
            traj.deviation_norms.push(a.distance(&b));
            traj.blowup_flags.push(false);
        }
    }
    Ok(traj)
}

/// Least-squares slope of `ln(norm)` against time: the exponential rate `s`
/// in `norm ~ C exp(s t)`. Records with nonpositive or non-finite norms are skipped.
pub fn fit_growth_rate(times: &[f64], norms: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
