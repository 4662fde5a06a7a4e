use thiserror::Error;

use crate::dsl::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("symbol is singular or non-finite at xi = {0}")]
    SymbolSingular(f64),

    #[error("second derivative at the origin did not converge: {0}")]
    DerivativeUnstable(String),

    #[error("recipe {recipe} expects {expected} symbol(s), got {got}")]
    RecipeArity {
        recipe: &'static str,
        expected: usize,
        got: usize,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("bad grid: {0}")]
    BadGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("gamma vanishes (F(0) + G(0)H(0) = 0)")]
    GammaZero,

    #[error("abcd condition ({which}) violated")]
    AbcdConditionViolated { which: u8 },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("symbol sampling unresolved: {0}")]
    ScanUnresolved(String),

    #[error("G does not smooth H: slope of G is {g_slope:.3}, needs <= {bound:.3}")]
    SmoothingMismatch { g_slope: f64, bound: f64 },

    #[error("omega^2 - M^2 is not positive at grid frequency xi = {xi}")]
    SpectrumCollision { xi: f64 },

    #[error("grid under-resolved: tail fraction {tail:.3e} exceeds {tol:.3e}")]
    GridUnderResolved { tail: f64, tol: f64 },

    #[error(
        "Newton iteration diverged after {iterations} iteration(s), last residual {last_norm:.3e}"
    )]
    NewtonDiverged { iterations: usize, last_norm: f64 },

    #[error("Jacobian factorization failed")]
    JacobianSingular,

    #[error("invalid solve configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("assumption precondition failed: {0}")]
    AssumptionFailed(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SymbolSingular(_) => "SymbolSingular",
            Error::DerivativeUnstable(_) => "DerivativeUnstable",
            Error::RecipeArity { .. } => "RecipeArity",
            Error::Parse(ParseError::Syntax { .. }) => "ParseError",
            Error::Parse(ParseError::UnknownIdentifier { .. }) => "UnknownIdentifier",
            Error::BadGrid(_) => "BadGrid",
            Error::GridMismatch => "GridMismatch",
            Error::GammaZero => "GammaZero",
            Error::AbcdConditionViolated { .. } => "AbcdConditionViolated",
            Error::UnknownModel(_) => "UnknownModel",
            Error::ScanUnresolved(_) => "ScanUnresolved",
            Error::SmoothingMismatch { .. } => "SmoothingMismatch",
            Error::SpectrumCollision { .. } => "SpectrumCollision",
            Error::GridUnderResolved { .. } => "GridUnderResolved",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::JacobianSingular => "JacobianSingular",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InsufficientData(_) => "InsufficientData",
            Error::AssumptionFailed(_) => "AssumptionFailed",
        }
    }
}
