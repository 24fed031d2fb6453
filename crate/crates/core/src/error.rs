use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{0}")]
    InvalidArgument(String),

    #[error("quasi-momentum z = {z} lies within the excluded zone-boundary margin")]
    ZoneBoundaryExcluded { z: f64 },

    #[error("half-width M = {m} is below the highest harmonic N = {n}")]
    TruncationTooSmall { m: usize, n: usize },

    #[error("{what} (dim = {dim}, z = {z})")]
    NumericalFailure { what: String, dim: usize, z: f64 },

    #[error("eigenvalues {lower} and {upper} at z = {z} are closer than {tol:e}")]
    DegenerateBands {
        z: f64,
        lower: f64,
        upper: f64,
        tol: f64,
    },

    #[error("bands {band} and {} are not separated by a gap (gap = {gap:e})", band + 1)]
    BandOverlap { band: usize, gap: f64 },

    #[error("{0}")]
    SupportViolation(String),

    #[error("momentum k = {k} lies within the seam margin of a half-integer")]
    FoldingSeam { k: f64 },

    #[error("{0}")]
    WrongOperation(String),

    #[error("packet norm inside the window is short of unity by {deficit:e}")]
    WindowDeficit { deficit: f64 },

    #[error("Nyquist momentum {nyquist} is below the required {required}")]
    NyquistViolation { nyquist: f64, required: f64 },

    #[error("refinement disagreement: {0}")]
    Quadrature(String),

    #[error("{0}")]
    BandFile(String),
}

impl Error {
    /// Stable kebab-case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ZoneBoundaryExcluded { .. } => "zone-boundary-excluded",
            Error::TruncationTooSmall { .. } => "truncation-too-small",
            Error::NumericalFailure { .. } => "numerical-failure",
            Error::DegenerateBands { .. } => "degenerate-bands",
            Error::BandOverlap { .. } => "band-overlap",
            Error::SupportViolation(_) => "support-violation",
            Error::FoldingSeam { .. } => "folding-seam",
            Error::WrongOperation(_) => "wrong-operation",
            Error::WindowDeficit { .. } => "window-deficit",
            Error::NyquistViolation { .. } => "nyquist-violation",
            Error::Quadrature(_) => "quadrature",
            Error::BandFile(_) => "band-file",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
