use num_complex::Complex64;
use thiserror::Error;

use crate::zeros::SearchRegion;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("cannot factor {n}: exceeds sieve bound {bound}")]
    FactorizationBound { n: u64, bound: u64 },

    #[error("Euler factor at p={p} vanishes (|1 - a_p e^(-lambda_p s)| = {magnitude:.3e})")]
    VanishingFactor { p: u64, magnitude: f64 },

    #[error("unsupported modulus {0}: unit group is not cyclic and no explicit table exists")]
    UnsupportedModulus(u64),

    #[error("modulus {q} exceeds configured bound {bound}")]
    ModulusTooLarge { q: u64, bound: u64 },

    #[error("pole at s=1")]
    PoleAtOne,

    #[error("pole at {pole} inside the derivative circle of radius {radius:e} around {center}")]
    PoleInsideCircle { center: Complex64, pole: Complex64, radius: f64 },

    #[error("{0} has no registered functional equation")]
    NoFunctionalEquation(String),

    #[error("zero on or near the boundary of {region} after {attempts} perturbations")]
    BoundaryZero { region: SearchRegion, attempts: usize },

    #[error("pole at {pole} inside {region}")]
    PoleInRegion { region: SearchRegion, pole: Complex64 },

    #[error("Newton iteration diverged in cell {cell}")]
    NewtonDiverged { cell: SearchRegion },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("seed {seed} is not on the curve (residual {residual:.3e})")]
    SeedNotOnCurve { seed: Complex64, residual: f64 },

    #[error("no derivative zero found on the segment (min |f'| = {min_abs_derivative:.3e})")]
    NoRootOnSegment { min_abs_derivative: f64 },

    #[error("conjugate-point solve collapsed onto the starting point {0}")]
    CollapsedToIdentity(Complex64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
