use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad class of a failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input: bad values, unparsable text, inconsistent grids.
    Data,
    /// The numerics could not produce a result from otherwise valid input.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("time series is empty")]
    EmptySeries,
    #[error("sample step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("non-finite value {value} at sample {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("series has {len} samples, at least {min} required")]
    SeriesTooShort { len: usize, min: usize },
    #[error("query time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("window {window} invalid for a series of {len} samples")]
    WindowTooLarge { window: usize, len: usize },
    #[error("series are not on the same time grid")]
    GridMismatch,

    #[error("csv: {0}")]
    Csv(String),
    #[error("csv row {row}: {msg}")]
    CsvRow { row: usize, msg: String },
    #[error("time column not uniformly sampled at row {row}")]
    NonUniformGrid { row: usize },
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("invalid high-pass cutoff {cutoff_hz} Hz for sample rate {sample_rate_hz} Hz")]
    InvalidCutoff { cutoff_hz: f64, sample_rate_hz: f64 },

    #[error("parse error at byte {offset}: expected {expected}")]
    Parse { offset: usize, expected: String },
    #[error("duplicate term `{0}`")]
    DuplicateTerm(String),
    #[error("stiffness library may only contain powers of q, found `{0}`")]
    NotStiffnessTerm(String),

    #[error("inertia must be positive and finite, got {0}")]
    InvalidInertia(f64),
    #[error("displacement never crosses zero")]
    NoCrossings,
    #[error("{crossings} crossings retained, {required} needed for {terms} terms")]
    InsufficientCrossings { crossings: usize, required: usize, terms: usize },
    #[error("{available} retained samples, at least {required} needed")]
    InsufficientSamples { available: usize, required: usize },
    #[error("least-squares system has {rows} rows and {cols} columns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("every conservative-force sample was masked out")]
    AllMasked,
    #[error("every dictionary column fell below the threshold")]
    AllThresholded,
    #[error("coefficient/library length mismatch: {coeffs} coefficients for {terms} terms")]
    CoefficientMismatch { coeffs: usize, terms: usize },

    #[error("invalid solver settings: {0}")]
    InvalidSolver(String),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step limit {max_steps} reached at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("frequency {freq_hz} Hz is not below the Nyquist frequency {nyquist_hz} Hz")]
    FrequencyAboveNyquist { freq_hz: f64, nyquist_hz: f64 },
    #[error("frequencies must be positive and finite")]
    InvalidFrequency,

    #[error("model file: {0}")]
    Model(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NoCrossings
            | Error::InsufficientCrossings { .. }
            | Error::InsufficientSamples { .. }
            | Error::Underdetermined { .. }
            | Error::AllMasked
            | Error::AllThresholded
            | Error::StepSizeUnderflow { .. }
            | Error::TooManySteps { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}
