use thiserror::Error;

/// Errors raised by the numerical and arithmetic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("pole at s = 1")]
    Pole,

    #[error("too close to a pole of the gamma factor (distance {0:e})")]
    NearPole(f64),

    #[error("modulus {modulus} is not divisible by conductor {conductor}")]
    NotInducible { conductor: u64, modulus: u64 },

    #[error("character {0} is not primitive")]
    Imprimitive(String),

    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),

    #[error("weight function is not admissible: {0}")]
    Inadmissible(String),

    #[error("truncation order {have} is insufficient, need {need}")]
    Truncation { have: usize, need: usize },

    #[error("division by a series with vanishing leading coefficient")]
    SeriesDivision,

    #[error("approximate functional equation constraint violated: {0}")]
    AfeConstraint(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
