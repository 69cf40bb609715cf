//! Error type shared across the crate.

use std::fmt;

/// Everything that can go wrong while building models, evaluating dynamics,
/// running controllers, or driving the hybrid simulation.
#[derive(Debug)]
pub enum SimError {
    /// A vector or matrix had the wrong size for the operation.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A frame name was not found in the model's frame registry.
    UnknownFrame(String),
    /// A joint name was not found in the model.
    UnknownJoint(String),
    /// Model structure is invalid (bad tree, bad parameters, ...).
    InvalidModel(String),
    /// A constraint Jacobian (or derived Gram matrix) lost row rank.
    RankDeficient { what: &'static str, detail: String },
    /// The decoupling matrix was singular or too ill-conditioned to invert.
    SingularDecoupling { cond: f64 },
    /// An output's declared relative degree is inconsistent at the evaluated
    /// state (an intermediate input-derivative term did not vanish).
    RelativeDegree { output: String, residual: f64 },
    /// The phase variable is not advancing (tau_dot <= 0 where it must be > 0).
    PhaseNotAdvancing { tau_dot: f64 },
    /// The walker fell (hip dropped below the fall threshold).
    Fall { t: f64, hip_height: f64 },
    /// A domain hit its wall-clock-equivalent simulation time limit without
    /// reaching the guard.
    Timeout { t_max: f64 },
    /// The integrator could not take a step (step size underflow, NaN, ...).
    IntegrationFailure(String),
    /// A state or derived quantity stopped being finite.
    NonFinite(&'static str),
    /// Configuration or input-file content is invalid.
    Config(String),
    /// An input file did not match the expected schema.
    Schema(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected dimension {expected}, got {got}"),
            SimError::UnknownFrame(name) => write!(f, "unknown frame `{name}`"),
            SimError::UnknownJoint(name) => write!(f, "unknown joint `{name}`"),
            SimError::InvalidModel(msg) => write!(f, "invalid model: {msg}"),
            SimError::RankDeficient { what, detail } => {
                write!(f, "rank-deficient {what}: {detail}")
            }
            SimError::SingularDecoupling { cond } => {
                write!(f, "decoupling matrix singular (cond ~ {cond:.3e})")
            }
            SimError::RelativeDegree { output, residual } => write!(
                f,
                "output `{output}`: declared relative degree inconsistent \
                 (input-derivative residual {residual:.3e})"
            ),
            SimError::PhaseNotAdvancing { tau_dot } => {
                write!(f, "phase variable not advancing (tau_dot = {tau_dot:.3e})")
            }
            SimError::Fall { t, hip_height } => {
                write!(f, "fall detected at t = {t:.4} s (hip height {hip_height:.3} m)")
            }
            SimError::Timeout { t_max } => {
                write!(f, "guard not reached within domain time limit {t_max} s")
            }
            SimError::IntegrationFailure(msg) => write!(f, "integration failure: {msg}"),
            SimError::NonFinite(what) => write!(f, "non-finite value in {what}"),
            SimError::Config(msg) => write!(f, "config error: {msg}"),
            SimError::Schema(msg) => write!(f, "schema mismatch: {msg}"),
            SimError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for SimError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SimError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e)
    }
}

pub type SimResult<T> = Result<T, SimError>;
