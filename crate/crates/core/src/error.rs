use thiserror::Error;

/// Errors raised by dataset validation, nuisance fitting, estimation and the
/// oracle computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row {row}: NA coupling violated ({detail})")]
    NaCouplingViolation { row: usize, detail: String },

    #[error("row {row}: expected {expected} covariates, found {found}")]
    DimMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: non-finite value in {field}")]
    NonFiniteValue { row: usize, field: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("fold count {folds} is invalid for {n} samples (need 2 <= L <= n)")]
    BadFoldCount { n: usize, folds: usize },

    #[error("fold {fold}: {detail}")]
    FoldTooSmall { fold: usize, detail: String },

    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("arm {arm}: {available} observations, need at least {required}")]
    InsufficientArmData {
        arm: u8,
        available: usize,
        required: usize,
    },

    #[error("normal equations are singular (use lambda > 0)")]
    SingularSystem,

    #[error("class absent from training data: {0}")]
    ClassAbsent(String),

    #[error("Riesz representer outside the generator domain: {0}")]
    DomainViolation(String),

    #[error("fluctuation denominator is zero: representer vanishes on every labeled row")]
    ZeroDenominator,

    #[error("confidence level {0} is not in (0, 1)")]
    BadLevel(f64),

    #[error("labeled fraction {0} is not in (0, 1)")]
    BadAlpha(f64),

    #[error("grid [{lo}, {hi}] excludes the minimizer (hit boundary at {at}); widen the grid")]
    GridExcludesMinimum { lo: f64, hi: f64, at: f64 },

    #[error("invalid DGP specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("report incomplete: {failed} of {total} replications failed")]
    ReportIncomplete { failed: usize, total: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed input (data files, specs, configs)
    /// as opposed to failures during fitting or estimation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NaCouplingViolation { .. }
                | Error::DimMismatch { .. }
                | Error::NonFiniteValue { .. }
                | Error::EmptyDataset(_)
                | Error::BadFoldCount { .. }
                | Error::Parse { .. }
                | Error::BadLevel(_)
                | Error::BadAlpha(_)
                | Error::InvalidSpec(_)
                | Error::InvalidConfig(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
