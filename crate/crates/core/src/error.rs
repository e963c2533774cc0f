use thiserror::Error;

pub type Result<T> = std::result::Result<T, PoaError>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoaError {
    #[error("survival {survival:e} at Q = {q} is below the numeric floor")]
    SurvivalUnderflow { q: f64, survival: f64 },

    #[error("marginal is not differentiable at the kink Q = {q}")]
    NonDifferentiablePoint { q: f64 },

    #[error("cost ratio r = {r} is inadmissible: it must lie in ({lower}, {upper})")]
    InadmissibleRatio { r: f64, lower: f64, upper: f64 },

    #[error("iteration did not converge after {iterations} steps (last Q = {last_q})")]
    NoConvergence { iterations: usize, last_q: f64 },

    #[error("no sign change of the residual on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("higher derivatives of the marginal are unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("parameter {name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("parameter {name} = {value} is at a singular point of the formula")]
    SingularParameter { name: &'static str, value: f64 },

    #[error("decentralized profit {profit_d:e} is below the degeneracy floor")]
    DegenerateScenario { profit_d: f64 },

    #[error("{available} samples supplied, at least {required} required")]
    InsufficientData { available: usize, required: usize },

    #[error("{empty} of {total} histogram bins are empty")]
    EmptyBins { empty: usize, total: usize },

    #[error("fitted density cannot be normalized: {0}")]
    NonNormalizable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl PoaError {
    /// Short stable identifier, used as the error column of CSV output.
    pub fn code(&self) -> &'static str {
        match self {
            Self::SurvivalUnderflow { .. } => "survival_underflow",
            Self::NonDifferentiablePoint { .. } => "non_differentiable",
            Self::InadmissibleRatio { .. } => "inadmissible_ratio",
            Self::NoConvergence { .. } => "no_convergence",
            Self::BracketFailure { .. } => "bracket_failure",
            Self::DerivativeUnavailable(_) => "derivative_unavailable",
            Self::OutOfRange { .. } => "out_of_range",
            Self::SingularParameter { .. } => "singular_parameter",
            Self::DegenerateScenario { .. } => "degenerate_scenario",
            Self::InsufficientData { .. } => "insufficient_data",
            Self::EmptyBins { .. } => "empty_bins",
            Self::NonNormalizable(_) => "non_normalizable",
            Self::InvalidParameter(_) => "invalid_parameter",
        }
    }
}
