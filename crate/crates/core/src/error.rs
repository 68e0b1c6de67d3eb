use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate: no transmission possible")]
    Degenerate,

    #[error("infeasible target VE {target_ve} for these parameters (requires ratio {ratio} > 1)")]
    InfeasibleTarget { target_ve: f64, ratio: f64 },

    #[error("undefined VE: no unvaccinated transmission observed")]
    UndefinedVe,

    #[error("insufficient data: no {arm} units")]
    InsufficientData { arm: &'static str },

    #[error("config line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },

    #[error("config field `{field}`: {reason}")]
    ConfigField { field: String, reason: String },

    #[error("io error on {path}: {reason}")]
    Io { path: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
