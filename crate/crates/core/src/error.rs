use thiserror::Error;

use crate::ode::OdeError;

/// Errors raised by the model, Josephson and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error("population imbalance z = {z} outside [-1, 1]")]
    ImbalanceOutOfRange { z: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("no two-phonon exchange: effective coupling J vanishes")]
    NoExchange,
    #[error("division by zero: detuning {which} vanishes with zero cavity damping")]
    SingularDetuning { which: &'static str },
    #[error("rescaled time tau = {tau} not below the limit 2/gamma = {limit}")]
    RescaledTimeDomain { tau: f64, limit: f64 },
    #[error("{0}")]
    Undefined(String),
    #[error(
        "closed form only available for the symmetric junction (delta = 0), got delta = {delta}"
    )]
    AsymmetricRefused { delta: f64 },
    #[error("too few zero crossings ({found}) to estimate a frequency; need at least {needed}")]
    TooFewCrossings { found: usize, needed: usize },
    #[error("no transition in range: still not trapped at delta = {delta_hi}")]
    NoTransitionInRange { delta_hi: f64 },
    #[error("analysis window [{start}, {end}] is not inside the trajectory span [{span_start}, {span_end}]")]
    WindowOutsideSpan {
        start: f64,
        end: f64,
        span_start: f64,
        span_end: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
