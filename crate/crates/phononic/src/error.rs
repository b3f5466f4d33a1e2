use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coefficient table cutoff {have} is below the required {need}")]
    CutoffMismatch { need: usize, have: usize },

    #[error("mass matrix is not positive definite on the retained subspace (smallest eigenvalue {smallest:e})")]
    IndefiniteMass { smallest: f64 },

    #[error("stiffness pencil is not positive definite: {0}")]
    IndefiniteStiffness(String),

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("pole map is singular at tau = {0}")]
    SingularPole(f64),

    #[error("nu = {nu} lies on the pole delta* = {pole}")]
    MassPole { nu: f64, pole: f64 },

    #[error("eigenvalue {index} is degenerate (neighbor within {gap:e}); use the eigenvalue-group formulation")]
    Degenerate { index: usize, gap: f64 },

    #[error("z = {z} lies outside the convergence disk of radius {r_star}")]
    OutsideDisk { z: f64, r_star: f64 },

    #[error("Dirichlet paths disagree at j = {index}: production {production}, oracle {oracle}")]
    PathDisagreement { index: usize, production: f64, oracle: f64 },

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
