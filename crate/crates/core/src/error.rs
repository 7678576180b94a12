use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration diverged at step {step} (t = {time}): {reason}")]
    Diverged {
        step: usize,
        time: f64,
        reason: &'static str,
    },

    #[error("eigenvalue is exactly zero; its argument is undefined")]
    ZeroEigenvalue,

    #[error("eigen-decomposition failed at p = {p}")]
    EigenFailure { p: f64 },

    #[error("only {got} renormalizations after the transient (need at least {needed})")]
    TooFewRenormalizations { got: usize, needed: usize },

    #[error("lattice point (p = {p}, q = {q}): {source}")]
    AtLatticePoint {
        p: f64,
        q: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, p: f64, q: f64) -> Self {
        Error::AtLatticePoint {
            p,
            q,
            source: Box::new(self),
        }
    }

    /// True for numerical blow-up, including blow-up nested inside a lattice
    /// point.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Diverged { .. } => true,
            Error::AtLatticePoint { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
