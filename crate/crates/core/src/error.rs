use thiserror::Error;

/// Errors raised by the calibration, lattice and hedging layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("degenerate Levy measure: {0}")]
    DegenerateMeasure(String),

    #[error("Fourier inversion failed at z={z}: {reason} (c={c}, l={l}, last increment={last_increment:e})")]
    Inversion {
        z: f64,
        c: f64,
        l: f64,
        last_increment: f64,
        reason: String,
    },

    #[error("inversion accuracy: {0}")]
    InversionAccuracy(String),

    #[error("degenerate returns: E[X^2] = 0")]
    DegenerateReturns,

    #[error("configuration: {0}")]
    Configuration(String),

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("problem too large: {0}")]
    Size(String),

    #[error("input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::DegenerateMeasure(_) => "degenerate_measure",
            Error::Inversion { .. } => "inversion",
            Error::InversionAccuracy(_) => "inversion_accuracy",
            Error::DegenerateReturns => "degenerate_returns",
            Error::Configuration(_) => "configuration",
            Error::InternalConsistency(_) => "internal_consistency",
            Error::Size(_) => "size",
            Error::Input(_) => "input",
        }
    }
    /// Prefix the message with `ctx`, keeping the error class.
    pub fn context(self, ctx: &str) -> Error {
        match self {
            Error::Parameter(m) => Error::Parameter(format!("{ctx}: {m}")),
            Error::DegenerateSample(m) => Error::DegenerateSample(format!("{ctx}: {m}")),
            Error::DegenerateMeasure(m) => Error::DegenerateMeasure(format!("{ctx}: {m}")),
            Error::Inversion {
                z,
                c,
                l,
                last_increment,
                reason,
            } => Error::Inversion {
                z,
                c,
                l,
                last_increment,
                reason: format!("{ctx}: {reason}"),
            },
            Error::InversionAccuracy(m) => Error::InversionAccuracy(format!("{ctx}: {m}")),
            Error::DegenerateReturns => Error::DegenerateReturns,
            Error::Configuration(m) => Error::Configuration(format!("{ctx}: {m}")),
            Error::InternalConsistency(m) => Error::InternalConsistency(format!("{ctx}: {m}")),
            Error::Size(m) => Error::Size(format!("{ctx}: {m}")),
            Error::Input(m) => Error::Input(format!("{ctx}: {m}")),
        }
    }
}
