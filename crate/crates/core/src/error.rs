use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Tree-model assumption violated by a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Base up-probability `g` must lie strictly inside (0, 1).
    BaseProbability,
    /// Volatility must be strictly positive.
    Volatility,
    /// Instantaneous mean `g*gamma + (1-g)*delta` must be finite.
    FiniteDrift,
    /// The step is too coarse: `g + v*sqrt(dt)` left (0, 1).
    StepProbability,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Assumption::BaseProbability => "assumption i: g must lie in (0, 1)",
            Assumption::Volatility => "assumption ii: sigma must be positive",
            Assumption::FiniteDrift => "assumption iii: drift b = g*gamma + (1-g)*delta must be finite",
            Assumption::StepProbability => "assumption iv: p = g + v*sqrt(dt) must lie in (0, 1)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters ({0})")]
    Assumption(Assumption),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("arbitrage: {0}")]
    Arbitrage(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("quote {index}: {source}")]
    Quote {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("infeasible start: {0}")]
    InfeasibleStart(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
