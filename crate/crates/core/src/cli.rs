//! The `mill` command line: reads a JSON run configuration, runs the
//! requested analyses and writes CSV tables.
//!
//! Exit codes: 0 success, 2 unreadable or malformed configuration (and usage
//! errors), 3 constraint violation, 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Deserialize;

use crate::evolve::{add_perturbation, cfl_limit, evolve, EvolveConfig, PerturbationShape, Scheme};
use crate::fredholm::{kernel_norm_check, nullspace_scan, KernelParams};
use crate::numerics::RadialGrid;
use crate::params::{
    admissible_outer_radius, validate_constants, validate_params, ModelParams, SteadyStateConstants,
};
use crate::stability::{linearization_errors, sweep_b};
use crate::steady::{check_identities, eval_steady, steady_residual, AxisymState};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONSTRAINT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Steady,
    Evolve,
    Stability,
    Fredholm,
    All,
}

#[derive(Debug, Parser)]
#[command(
    name = "mill",
    version,
    about = "Ant-mill steady states, evolution and stability"
)]
struct Args {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random directions of the linearization check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps (0 picks the number of cores).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub r_a: f64,
    pub r_b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    /// Defaults to the explicit stability limit `dr^2/(4D)`.
    pub dt: Option<f64>,
    pub n_steps: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Perturbation amplitude as a fraction of the smallest steady density.
    #[serde(default = "default_epsilon")]
    pub epsilon1: f64,
    #[serde(default = "default_one")]
    pub record_every: usize,
    #[serde(default = "default_shape")]
    pub shape: PerturbationShape,
    #[serde(default)]
    pub allow_cfl_violation: bool,
}

fn default_scheme() -> Scheme {
    Scheme::Rk4
}

fn default_epsilon() -> f64 {
    1e-3
}

fn default_one() -> usize {
    1
}

fn default_shape() -> PerturbationShape {
    PerturbationShape::Bump
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub n_modes: Vec<i32>,
    pub b_sweep: Vec<f64>,
    /// Defaults to the explicit stability limit `dr^2/(4D)`.
    pub dt_report: Option<f64>,
    #[serde(default = "default_directions")]
    pub directions: usize,
}

fn default_directions() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FredholmSection {
    pub k_values: Vec<f64>,
    #[serde(rename = "J")]
    pub j: OneOrMany,
    pub m: usize,
    #[serde(default = "default_unit")]
    pub v: f64,
    #[serde(default = "default_unit")]
    pub alpha_turn: f64,
}

fn default_unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub constants: ConstantsSection,
    pub grid: GridSection,
    pub evolve: Option<EvolveSection>,
    pub stability: Option<StabilitySection>,
    pub fredholm: Option<FredholmSection>,
    pub output_dir: Option<PathBuf>,
}

/// A failure with its exit code and message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Grid(_)
            | Error::Constraint(_)
            | Error::Domain { .. }
            | Error::Cfl { .. }
            | Error::Amplitude { .. }
            | Error::Invalid(_)
            | Error::GridMismatch
            | Error::FieldLength { .. } => EXIT_CONSTRAINT,
            Error::Denominator { .. }
            | Error::SingularVelocity { .. }
            | Error::ChemicalPole
            | Error::BlowUp { .. }
            | Error::NotSquare { .. }
            | Error::NoConvergence(_) => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: format!("writing output: {e}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: format!("writing output: {e}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses arguments, runs the analyses and returns the process exit code.
/// Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("mill: {}", f.message);
            f.code
        }
    }
}

pub fn load_config(path: &Path) -> std::result::Result<RunConfig, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed config {}: {e}", path.display()))
}

/// Inputs shared by every analysis, validated up front.
struct Prepared {
    params: ModelParams,
    constants: SteadyStateConstants,
    grid: RadialGrid,
    steady: AxisymState,
}

fn prepare(cfg: &RunConfig) -> Outcome<Prepared> {
    let params = cfg.model;
    let constants = SteadyStateConstants::new(&params, cfg.constants.c1, cfg.constants.c2);
    let mut violations = validate_params(&params).violations;
    violations.extend(validate_constants(&params, &constants).violations);
    if !violations.is_empty() {
        return Err(Error::Constraint(violations).into());
    }
    let grid = RadialGrid::new(cfg.grid.r_a, cfg.grid.r_b, cfg.grid.n)?;
    let steady = eval_steady(&params, &constants, &grid)?;
    Ok(Prepared {
        params,
        constants,
        grid,
        steady,
    })
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Outcome<&'a T> {
    s.as_ref()
        .ok_or_else(|| Failure::config(format!("configuration has no `{name}` section")))
}

fn execute(args: &Args) -> Outcome<()> {
    let cfg = load_config(&args.config).map_err(Failure::config)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));

    let wants = |m: Mode| args.mode == m || args.mode == Mode::All;
    // Every needed section must be present and valid before anything runs.
    let prepared = prepare(&cfg)?;
    let evolve_plan = if wants(Mode::Evolve) {
        Some(plan_evolve(section(&cfg.evolve, "evolve")?, &prepared)?)
    } else {
        None
    };
    let stability = if wants(Mode::Stability) {
        Some(check_stability(section(&cfg.stability, "stability")?)?)
    } else {
        None
    };
    let fredholm = if wants(Mode::Fredholm) {
        Some(check_fredholm(section(&cfg.fredholm, "fredholm")?)?)
    } else {
        None
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::config(format!("cannot start {} workers: {e}", args.jobs)))?;
    fs::create_dir_all(&out)?;

    // Independent analyses all run; the first failure decides the exit code.
    let mut first_failure: Option<Failure> = None;
    let mut note = |r: Outcome<()>| {
        if let Err(f) = r {
            eprintln!("mill: {}", f.message);
            first_failure.get_or_insert(f);
        }
    };
    if wants(Mode::Steady) {
        note(write_steady(&prepared, &out));
    }
    if let Some(plan) = evolve_plan {
        note(run_evolve(&plan, &prepared, &out));
    }
    if let Some(section) = stability {
        note(pool.install(|| run_stability(section, &prepared, args.seed, &out)));
    }
    if let Some(section) = fredholm {
        note(pool.install(|| run_fredholm(section, &out)));
    }
    match first_failure {
        None => Ok(()),
        Some(f) => Err(Failure {
            code: f.code,
            message: format!("{} (see messages above)", f.message),
        }),
    }
}

/// Shortest representation that parses back to the same `f64`.
fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn writer(out: &Path, name: &str) -> Outcome<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(out.join(name))?)
}

fn write_steady(p: &Prepared, out: &Path) -> Outcome<()> {
    let s = &p.steady;
    let mut w = writer(out, "steady.csv")?;
    w.write_record(["r", "rho0", "g0", "vtheta0"])?;
    for i in 0..p.grid.len() {
        w.write_record([
            fmt(p.grid.node(i)),
            fmt(s.rho[i]),
            fmt(s.g[i]),
            fmt(s.v_theta[i]),
        ])?;
    }
    w.flush()?;

    let id = check_identities(&p.params, s)?;
    let res = steady_residual(&p.params, s)?;
    let mut w = writer(out, "identities.csv")?;
    w.write_record(["quantity", "value"])?;
    let rows = [
        (
            "outer_radius_r_star",
            admissible_outer_radius(&p.params, &p.constants),
        ),
        (
            "max_abs_mass_residual_interior",
            res.mass.max_abs_interior(),
        ),
        ("max_abs_chemical_residual", res.chemical.max_abs()),
        (
            "max_abs_momentum_residual_interior",
            res.momentum.max_abs_interior(),
        ),
        ("chemical_deviation", id.chemical_deviation),
        ("flux_mean", id.flux_mean),
        ("flux_analytic", -p.constants.p * p.params.density_scale()),
        ("flux_max_deviation", id.flux_max_deviation),
        ("flux_relative_std", id.flux_relative_std),
        ("momentum_relative", id.momentum_relative),
    ];
    for (name, value) in rows {
        w.write_record([name.to_string(), fmt(value)])?;
    }
    w.flush()?;
    Ok(())
}

struct EvolvePlan {
    config: EvolveConfig,
    start: AxisymState,
}

fn plan_evolve(e: &EvolveSection, p: &Prepared) -> Outcome<EvolvePlan> {
    let dt = e.dt.unwrap_or_else(|| cfl_limit(&p.params, &p.steady));
    let config = EvolveConfig {
        dt,
        n_steps: e.n_steps,
        scheme: e.scheme,
        record_every: e.record_every,
        allow_cfl_violation: e.allow_cfl_violation,
        keep_snapshots: false,
        freeze_density: false,
    };
    let limit = cfl_limit(&p.params, &p.steady);
    if dt > limit && !e.allow_cfl_violation {
        return Err(Error::Cfl { dt, limit }.into());
    }
    if e.n_steps == 0 || e.record_every == 0 {
        return Err(Error::Invalid(
            "evolve.n_steps and evolve.record_every must be at least 1".into(),
        )
        .into());
    }
    let start = add_perturbation(&p.steady, e.epsilon1 * p.steady.rho.min(), e.shape)?;
    Ok(EvolvePlan { config, start })
}

fn run_evolve(plan: &EvolvePlan, p: &Prepared, out: &Path) -> Outcome<()> {
    let traj = evolve(&plan.start, &p.params, &plan.config, &p.steady)?;
    let mut w = writer(out, "trajectory.csv")?;
    w.write_record(["t", "deviation_norm", "blowup_flag"])?;
    for k in 0..traj.times.len() {
        let flag = if traj.blowup_flags[k] { "1" } else { "0" };
        w.write_record([
            fmt(traj.times[k]),
            fmt(traj.deviation_norms[k]),
            flag.to_string(),
        ])?;
    }
    w.flush()?;
    if traj.blew_up() {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!(
                "evolution blew up at t = {}",
                traj.times.last().copied().unwrap_or(0.0)
            ),
        });
    }
    Ok(())
}

fn check_stability(s: &StabilitySection) -> Outcome<&StabilitySection> {
    if s.n_modes.is_empty() || s.b_sweep.is_empty() {
        return Err(Error::Invalid(
            "stability.n_modes and stability.b_sweep must be non-empty".into(),
        )
        .into());
    }
    if let Some(b) = s.b_sweep.iter().find(|b| !(**b > 0.0)) {
        return Err(Error::Invalid(format!(
            "stability.b_sweep values must be positive, got {b}"
        ))
        .into());
    }
    if let Some(dt) = s.dt_report {
        if !(dt > 0.0) {
            return Err(
                Error::Invalid(format!("stability.dt_report must be positive, got {dt}")).into(),
            );
        }
    }
    Ok(s)
}

fn run_stability(s: &StabilitySection, p: &Prepared, seed: u64, out: &Path) -> Outcome<()> {
    let dt = s
        .dt_report
        .unwrap_or_else(|| cfl_limit(&p.params, &p.steady));
    let rows = sweep_b(&p.params, &p.constants, &p.grid, &s.b_sweep, &s.n_modes, dt)?;

    let mut spec = writer(out, "spectrum.csv")?;
    spec.write_record(["n", "b", "eig_index", "re", "im"])?;
    let mut rep = writer(out, "report.csv")?;
    rep.write_record([
        "n",
        "b",
        "dt",
        "norm_I_minus_dtM",
        "spectral_radius",
        "max_re_eig",
        "verdict",
    ])?;
    let mut failed = Vec::new();
    for row in &rows {
        match &row.outcome {
            Ok(cell) => {
                for (k, z) in cell.spectrum.iter().enumerate() {
                    spec.write_record([
                        row.n.to_string(),
                        fmt(row.b),
                        k.to_string(),
                        fmt(z.re),
                        fmt(z.im),
                    ])?;
                }
                let r = &cell.report;
                rep.write_record([
                    row.n.to_string(),
                    fmt(row.b),
                    fmt(r.dt),
                    fmt(r.norm_i_minus_dt_m),
                    fmt(r.spectral_radius_forward),
                    fmt(r.max_re_eig),
                    r.verdict.to_string(),
                ])?;
            }
            Err(msg) => {
                let nan = fmt(f64::NAN);
                rep.write_record([
                    row.n.to_string(),
                    fmt(row.b),
                    fmt(dt),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    "error".into(),
                ])?;
                failed.push(format!("b = {}, n = {}: {msg}", row.b, row.n));
            }
        }
    }
    spec.flush()?;
    rep.flush()?;

    let errors = linearization_errors(&p.params, &p.steady, seed, s.directions, 1e-6)?;
    let mut lin = writer(out, "linearization.csv")?;
    lin.write_record(["direction", "relative_error"])?;
    for (k, e) in errors.iter().enumerate() {
        lin.write_record([k.to_string(), fmt(*e)])?;
    }
    lin.flush()?;

    if !failed.is_empty() {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("stability sweep cells failed: {}", failed.join("; ")),
        });
    }
    Ok(())
}

struct FredholmPlan {
    kernels: Vec<KernelParams>,
    k_values: Vec<f64>,
    m: usize,
}

fn check_fredholm(f: &FredholmSection) -> Outcome<FredholmPlan> {
    let kernels =
        f.j.values()
            .into_iter()
            .map(|j| KernelParams::new(f.v, f.alpha_turn, j))
            .collect::<crate::Result<Vec<_>>>()?;
    if f.m < crate::fredholm::MIN_ANGLES {
        return Err(Error::Invalid(format!(
            "fredholm.m must be at least {}",
            crate::fredholm::MIN_ANGLES
        ))
        .into());
    }
    Ok(FredholmPlan {
        kernels,
        k_values: f.k_values.clone(),
        m: f.m,
    })
}

fn run_fredholm(plan: FredholmPlan, out: &Path) -> Outcome<()> {
    let mut w = writer(out, "fredholm.csv")?;
    w.write_record(["k", "J", "m", "sigma_min"])?;
    let mut norms = writer(out, "kernel_norm.csv")?;
    norms.write_record(["J", "m", "double_integral"])?;
    let mut failed = Vec::new();
    for kp in &plan.kernels {
        norms.write_record([
            fmt(kp.j),
            plan.m.to_string(),
            fmt(kernel_norm_check(kp, plan.m)?),
        ])?;
        for row in nullspace_scan(&plan.k_values, kp, plan.m)? {
            let sigma = match &row.sigma_min {
                Ok(s) => *s,
                Err(msg) => {
                    failed.push(format!("k = {}, J = {}: {msg}", row.k, kp.j));
                    f64::NAN
                }
            };
            w.write_record([fmt(row.k), fmt(kp.j), plan.m.to_string(), fmt(sigma)])?;
        }
    }
    w.flush()?;
    norms.flush()?;
    if !failed.is_empty() {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("fredholm scan cells failed: {}", failed.join("; ")),
        });
    }
    Ok(())
}
