use thiserror::Error;

/// Errors raised by the analysis pipeline and the protocol simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A finite-size estimate could not be formed (for example no single-photon Z counts
    /// survive the worst-case substitution). The analysis must stop here.
    #[error("estimation failure: {0}")]
    Estimation(String),

    #[error("protocol infeasible: {0}")]
    Infeasible(String),

    #[error("insufficient counts: need {needed}, have {available}")]
    InsufficientCounts { needed: u64, available: u64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }

    /// Numerical failures (domain or estimation) as opposed to configuration or feasibility
    /// outcomes.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Estimation(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
