use thiserror::Error;

use crate::oracle::Station;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: requires {rule}")]
    InvalidParameter { name: &'static str, value: f64, rule: &'static str },

    #[error("fluctuation-adjusted power P_A = {p_a} outside (0, P_d = {p_d})")]
    PaInvalid { p_a: f64, p_d: f64 },

    #[error("mean charging power is zero")]
    ZeroMeanPower,

    #[error("derivative does not change sign on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("{station} station gains {improvement} by deviating to {price}")]
    CertificationFailure { station: Station, price: f64, improvement: f64 },

    #[error("every design x yields a non-positive regulation revenue")]
    AllInfeasible,

    #[error("charging never completes: mean power is zero")]
    NeverCompletes,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::PaInvalid { .. } => "pa_invalid",
            Error::ZeroMeanPower => "zero_mean_power",
            Error::BracketFailure { .. } => "bracket_failure",
            Error::CertificationFailure { .. } => "certification_failure",
            Error::AllInfeasible => "all_infeasible",
            Error::NeverCompletes => "never_completes",
            Error::Parse { .. } => "parse_error",
        }
    }

    /// True for errors caused by the inputs rather than by a computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::PaInvalid { .. } | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
