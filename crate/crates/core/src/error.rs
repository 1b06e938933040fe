use thiserror::Error;

/// Errors raised by the spectrum engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model, schedule or file failed structural validation.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The requested evaluation is not available for this kind of input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("rational rotation number: steering may be impossible (alpha ~ {p}/{q})")]
    RationalRotation { p: u64, q: u64 },

    #[error("steering budget exceeded; best distance found {best_distance:e}")]
    SteeringBudget { best_distance: f64 },

    #[error("exact arithmetic overflow in {0}")]
    Overflow(&'static str),

    /// Maximum not isolated: several arguments attain it within tolerance.
    #[error("non-unique argmax: {0}")]
    NonUniqueArgmax(String),

    #[error("no interior candidate at this grid resolution (grid {grid}, best run {best_run}, needed {needed})")]
    NoInteriorCandidate {
        grid: usize,
        best_run: usize,
        needed: usize,
    },

    #[error("degenerate interval: {0}")]
    DegenerateInterval(String),

    #[error("maximum point is periodic; use the periodic case")]
    UsePeriodicCase,

    /// A hypothesis of a construction does not hold for the supplied data.
    #[error("construction failed: {0}")]
    Construction(String),
}

impl SpectraError {
    /// `true` for errors caused by malformed input rather than a failed construction.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SpectraError::Domain(_) | SpectraError::InvalidModel(_) | SpectraError::Unsupported(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            SpectraError::Domain(_) => "domain",
            SpectraError::InvalidModel(_) => "invalid_model",
            SpectraError::Unsupported(_) => "unsupported",
            SpectraError::RationalRotation { .. } => "rational_rotation",
            SpectraError::SteeringBudget { .. } => "steering_budget",
            SpectraError::Overflow(_) => "overflow",
            SpectraError::NonUniqueArgmax(_) => "non_unique_argmax",
            SpectraError::NoInteriorCandidate { .. } => "no_interior_candidate",
            SpectraError::DegenerateInterval(_) => "degenerate_interval",
            SpectraError::UsePeriodicCase => "use_periodic_case",
            SpectraError::Construction(_) => "construction",
        }
    }
}

pub type Result<T> = std::result::Result<T, SpectraError>;
