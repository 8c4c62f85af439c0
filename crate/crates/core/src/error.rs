use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("all points coincide (spread is zero)")]
    ZeroSpread,

    #[error("all pairwise distances are zero")]
    DegenerateMetric,

    #[error("fixture infeasible: {0}")]
    FixtureInfeasible(String),

    #[error("input is not l2-squared: measured beta {beta} is below the floor {floor}")]
    InvalidMetric { beta: f64, floor: f64 },

    #[error("internal case failure: {0}")]
    InternalCaseFailure(String),

    #[error("no separated pair found after {attempts} directions")]
    NoSeparation { attempts: usize },

    #[error("spectral decomposition failed: {0}")]
    SpectralFailure(&'static str),

    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),

    #[error("cut must be a proper nonempty subset")]
    EmptyOrFullCut,

    #[error("instance too large: n = {n}, limit is {max}")]
    TooLarge { n: usize, max: usize },

    #[error("values are constant, no threshold cut exists")]
    ConstantValues,

    #[error("graph is not regular")]
    NotRegular,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the caller's input rather than by a failure inside the library.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::InternalCaseFailure(_) | Error::SpectralFailure(_) | Error::Io(_)
        )
    }

    /// Short machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::ZeroSpread => "ZeroSpread",
            Error::DegenerateMetric => "DegenerateMetric",
            Error::FixtureInfeasible(_) => "FixtureInfeasible",
            Error::InvalidMetric { .. } => "InvalidMetric",
            Error::InternalCaseFailure(_) => "InternalCaseFailure",
            Error::NoSeparation { .. } => "NoSeparation",
            Error::SpectralFailure(_) => "SpectralFailure",
            Error::IsolatedVertex(_) => "IsolatedVertex",
            Error::EmptyOrFullCut => "EmptyOrFullCut",
            Error::TooLarge { .. } => "TooLarge",
            Error::ConstantValues => "ConstantValues",
            Error::NotRegular => "NotRegular",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }
}
