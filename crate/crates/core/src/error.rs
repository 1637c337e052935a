use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("energy {energy} is not above the medium level {level} on the {side} side")]
    BelowMedium {
        energy: f64,
        level: f64,
        side: &'static str,
    },

    #[error("media mismatch at join: {left} vs {right}")]
    MediaMismatch { left: f64, right: f64 },

    #[error("resonant denominator |1 - R~1 R2 e^(2ikL)| = {0:e} is numerically singular")]
    SingularDenominator(f64),

    #[error("conditioning failure: {0}; evaluate the barrier in log-magnitude form or split it")]
    Conditioning(String),

    #[error("loss W = {0} outside [0, 1]")]
    LossOutOfRange(f64),

    #[error("integration step underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("integration diverged at x = {x}: |R~| = {modulus}")]
    Divergence { x: f64, modulus: f64 },

    #[error("no resonance: {0}")]
    NoResonance(String),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Config/IO problems versus numerical failures; the CLI maps these to
    /// distinct exit codes.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Io(_) | Error::InvalidParameter(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
