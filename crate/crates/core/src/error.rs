use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("thermal dynamics undersampled: sample interval {dt_s:e} s must be below tau/4 = {limit_s:e} s")]
    ThermalUndersampled { dt_s: f64, limit_s: f64 },

    #[error("calibration failed at {freq_hz:e} Hz: {reason}")]
    CalibrationTone { freq_hz: f64, reason: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("no envelope above the detection threshold")]
    NoEnvelope,

    #[error("no sub-envelopes found in the scan trace")]
    NoSubEnvelopes,

    #[error("lookup table is not strictly monotone over [{lo_hz:e}, {hi_hz:e}] Hz")]
    NonMonotoneLut { lo_hz: f64, hi_hz: f64 },

    #[error("no signal: mean normalized power {level:.4} is below the noise floor {floor:.4}")]
    NoSignal { level: f64, floor: f64 },

    #[error("normalized level {level:.4} lies outside the lookup table")]
    OutsideLut { level: f64 },

    #[error("length mismatch: {left} estimates vs {right} truths")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{stage} failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    /// Tags the error with the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
