use thiserror::Error;

use crate::params::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("field length {got} does not match grid node count {expected}")]
    FieldLength { expected: usize, got: usize },

    #[error("constraint violation: {}", join_violations(.0))]
    Constraint(Vec<Violation>),

    #[error("outer radius r_b = {r_b} is not below the admissible radius r* = {r_star} (density would be nonpositive)")]
    Domain { r_b: f64, r_star: f64 },

    #[error("alpha + beta*g is nonpositive ({value}) at node {node}")]
    Denominator { node: usize, value: f64 },

    #[error("vanishing denominator in perturbation velocities at node {node}")]
    SingularVelocity { node: usize },

    #[error("growth rate s = -1 is a pole of the chemical relaxation")]
    ChemicalPole,

    #[error("time step dt = {dt} exceeds the stability guard dr^2/(4D) = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("perturbation amplitude {amplitude} is not below 0.1*min(rho) = {limit}")]
    Amplitude { amplitude: f64, limit: f64 },

    #[error("non-finite state after step {step}")]
    BlowUp { step: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{0} failed to converge")]
    NoConvergence(&'static str),

    #[error("state grid does not match operator grid")]
    GridMismatch,

    #[error("{0}")]
    Invalid(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
