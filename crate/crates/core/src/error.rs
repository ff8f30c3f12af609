use thiserror::Error;

use crate::validate::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("detuning vanishes for m = {0}; coherent amplitude is singular")]
    SingularDetuning(String),

    #[error("Fock truncation at n_max = {n_max} leaves tail mass {tail:e} (tolerance {tol:e})")]
    Truncation { n_max: usize, tail: f64, tol: f64 },

    #[error("parameter is not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("zero total counts; amplitude normalization is undefined")]
    ZeroCounts,

    #[error("norm drifted to {norm} (tolerance {tol:e})")]
    NormDrift { norm: f64, tol: f64 },

    #[error("invalid configuration: {}", format_violations(.0))]
    Config(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
