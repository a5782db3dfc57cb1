//! Nonlinear runs checked against the sign and size of the linear growth rate.

use antmill::evolve::{
    add_perturbation, cfl_limit, evolve, evolve_pair, fit_growth_rate, EvolveConfig,
    PerturbationShape, Scheme,
};
use antmill::numerics::RadialGrid;
use antmill::params::{admissible_outer_radius, ModelParams, SteadyStateConstants};
use antmill::stability::{assemble_operator, leading_mode};
use antmill::steady::{eval_steady, AxisymState};

/// Steep profile (exponent p = 3) whose axisymmetric mode grows without
/// oscillating.
fn steep(n: usize) -> (ModelParams, AxisymState) {
    let p = ModelParams::new(1.0, 1.0, 1.0, 1.0);
    let c = SteadyStateConstants::new(&p, 2.0, 2.0);
    let grid = RadialGrid::new(0.5, 0.9 * admissible_outer_radius(&p, &c), n).unwrap();
    (p, eval_steady(&p, &c, &grid).unwrap())
}

#[test]
fn leading_mode_grows_at_its_eigenvalue() {
    let (p, steady) = steep(32);
    let op = assemble_operator(&p, &steady, 0).unwrap();
    let mode = leading_mode(&op).unwrap();
    let s = mode.s;
    assert!(s.re > 1.0 && s.im.abs() < 1e-8, "leading eigenvalue {s}");

    // Seed the nonlinear run along the real part of the eigenvector.
    let eps = 1e-8;
    let mut start = steady.clone();
    for (dst, src) in
        start
            .fields_mut()
            .into_iter()
            .zip([&mode.f, &mode.g, &mode.h_r, &mode.h_theta])
    {
        for (v, z) in dst.values_mut().iter_mut().zip(src.values()) {
            *v += eps * z.re;
        }
    }
    let cfg = EvolveConfig {
        record_every: 100,
        ..EvolveConfig::new(cfl_limit(&p, &steady), 4000, Scheme::Rk4)
    };
    let traj = evolve_pair(&start, &steady, &p, &cfg).unwrap();
    assert!(!traj.blew_up());
    assert!(
        traj.deviation_norms.windows(2).all(|w| w[1] > w[0]),
        "growth is not monotone"
    );
    let rate = fit_growth_rate(&traj.times, &traj.deviation_norms).unwrap();
    assert!(
        (rate - s.re).abs() <= 0.05 * s.re,
        "fitted {rate}, eigenvalue {}",
        s.re
    );
}

#[test]
fn unstable_profile_leaves_the_steady_state() {
    let (p, steady) = steep(32);
    let start = add_perturbation(&steady, 1e-3, PerturbationShape::Mode0Sine).unwrap();
    let cfg = EvolveConfig {
        record_every: 100,
        ..EvolveConfig::new(cfl_limit(&p, &steady), 20_000, Scheme::Rk4)
    };
    let traj = evolve(&start, &p, &cfg, &steady).unwrap();
    let last = *traj.deviation_norms.last().unwrap();
    assert!(traj.blew_up() || last > 100.0 * traj.deviation_norms[0]);
}
