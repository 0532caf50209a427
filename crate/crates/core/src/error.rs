use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("discriminant g2^3 - 27 g3^2 = {0:e} is too close to zero")]
    DegenerateDiscriminant(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// ℘(z1) and ℘(z2) coincide, so the addition-formula slope is undefined.
    #[error("degenerate pair: wp(z1) and wp(z2) coincide (|difference| = {0:e})")]
    DegeneratePair(f64),

    #[error("argument {re} + {im}i lies on a lattice pole")]
    Pole { re: f64, im: f64 },

    #[error("row {0} has zero norm")]
    DegenerateRow(usize),

    #[error("correlation is undefined for constant input")]
    UndefinedCorrelation,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
