//! Small-amplitude solitary waves of Boussinesq-type systems with general
//! Fourier-multiplier dispersion, computed by Newton's method around the
//! KdV soliton in the long-wave rescaling.

pub mod assumptions;
pub mod dsl;
pub mod error;
pub mod models;
pub mod postprocess;
pub mod solver;
pub mod spectral;
pub mod symbol;

pub use assumptions::{check_assumptions, predicted_exponent, AssumptionReport, ScanParams};
pub use dsl::{compile_symbol, parse_symbol, symbol_from_str, Expr, ParseError, SymbolExpr};
pub use error::{Error, Result};
pub use models::{
    all_builtins, custom_system, make_abcd, make_builtin, reduce_system, BoussinesqOperators,
    SystemSpec,
};
pub use postprocess::{rate_fit, reconstruct_eta, system_residual, unscale, RateStudy};
pub use solver::{
    continuation_sweep, kdv_profile, newton_solve, omega_of, phi_eval, phi_jacobian_apply,
    SolveConfig, SolveResult,
};
pub use spectral::{make_grid, Field, Grid};
pub use symbol::{combine, MultiplierSymbol, Recipe};
