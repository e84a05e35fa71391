use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is not 1 (got {trace})")]
    NotUnitTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid qubit input: |r| = {r_abs} exceeds sqrt(p(1-p)) = {bound} for p = {p}")]
    InvalidQubitInput { p: f64, r_abs: f64, bound: f64 },

    #[error("invalid populations: {0}")]
    InvalidPopulations(String),

    #[error(
        "Fock truncation overflow: tail mass {tail_mass:e} at n_max = {n_max} and no room to grow"
    )]
    TruncationOverflow { n_max: usize, tail_mass: f64 },

    #[error("no convergence after {iterations} iterations (distance {distance:e})")]
    NoConvergence { iterations: usize, distance: f64 },

    #[error("forgetfulness fit degenerate: {0}")]
    FitDegenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}
