use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("local projections have vanishing probability (denominator {0:e})")]
    DegenerateConditioning(f64),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid preset: {0}")]
    InvalidPreset(String),

    #[error("preset mismatch: expected `{expected}`, found `{found}`")]
    PresetMismatch { expected: String, found: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("labels contain a single class; ROC needs both")]
    DegenerateLabels,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    DivergedTraining { epoch: usize },

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("dataset cannot be regenerated from its seed: {0}")]
    NotRegenerable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }
}
