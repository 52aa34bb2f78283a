use thiserror::Error;

/// Every failure the workbench can report, named after the condition that
/// triggered it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FtcError {
    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(String),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("pole on frequency grid at omega = {omega} rad/s")]
    PoleOnGrid { omega: f64 },
    #[error("denominator is constant, no poles to compute")]
    DegenerateDenominator,
    #[error("system is unstable, H-infinity norm undefined")]
    UnstableSystem,
    #[error("algebraic loop: 1 + L is identically zero")]
    AlgebraicLoop,
    #[error("airspeed {airspeed} m/s outside the tabulated envelope [{min}, {max}]")]
    OutOfEnvelope { airspeed: f64, min: f64, max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("nominal plant vanishes at omega = {omega} rad/s")]
    NominalZero { omega: f64 },
    #[error("uncertainty weight fit failed: {0}")]
    FitFailure(String),
    #[error("closed loop is improper: {0}")]
    ImproperLoop(String),
    #[error("no stabilizing gains found for {0}")]
    NoStabilizingGains(String),
    #[error("pair (A, B) is not stabilizable")]
    NotStabilizable,
    #[error("nominal closed loop is unstable")]
    UnstableNominal,
    #[error("wrench not achievable: residual {residual:.3} exceeds 10% of demand {demand:.3}")]
    InfeasibleWrench { residual: f64, demand: f64 },
    #[error("gain schedule incomplete: {0}")]
    IncompleteSchedule(String),
    #[error("state became non-finite at t = {time} s: {detail}")]
    NonFiniteState { time: f64, detail: String },
    #[error("transition timeout: airspeed {airspeed:.2} m/s at the {cap} s cap")]
    TransitionTimeout { airspeed: f64, cap: f64 },
    #[error("evaluation window contains no samples")]
    EmptyWindow,
    #[error("evaluation windows differ between logs")]
    WindowMismatch,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FtcError {
    fn from(e: std::io::Error) -> Self {
        FtcError::Io(e.to_string())
    }
}

impl From<toml::de::Error> for FtcError {
    fn from(e: toml::de::Error) -> Self {
        FtcError::Parse(e.to_string())
    }
}

impl From<toml::ser::Error> for FtcError {
    fn from(e: toml::ser::Error) -> Self {
        FtcError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FtcError>;
