use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {panels} panels")]
    NonConvergence {
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("t = {t} lies outside the ladder of validity (n_max = {n_max})")]
    OutOfLadder { t: f64, n_max: u32 },

    #[error("index a = {a} is in regime {found:?}, operation needs {expected:?}")]
    WrongRegime {
        a: u64,
        found: crate::model::Regime,
        expected: crate::model::Regime,
    },

    #[error("balance flow stopped after {iterations} iterations with residual {residual:e} (|tau| = {tau_norm:e})")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        tau_norm: f64,
    },

    #[error("no center-of-mass value supplied for cusp index a = {0}")]
    MissingMu(u64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
