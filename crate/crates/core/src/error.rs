use thiserror::Error;

pub type Result<T> = std::result::Result<T, QsdcError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsdcError {
    #[error("wave-plate angle must be finite, got {0}")]
    NonFiniteAngle(f64),

    #[error("reflectivity must lie in [0, 1], got {0}")]
    ReflectivityOutOfRange(f64),

    #[error("phase {0} rad is not one of 0, pi/2, pi, 3pi/2")]
    InvalidPhi(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("port amplitudes carry total weight {0}, expected 1")]
    NormViolation(f64),

    #[error("scenario {0} has no per-case decomposition")]
    UnsupportedScenario(&'static str),

    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
}
