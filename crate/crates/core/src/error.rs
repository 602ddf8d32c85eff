use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("multiplexing factor {0} outside (0, 1]")]
    AlphaOutOfRange(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(Infeasibility),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("power recovery failed: {0}")]
    Recovery(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

/// Certificate attached to an infeasible allocation problem.
///
/// `required_power` is the smallest total decoy power that satisfies the
/// deception threshold with every true band silent; it is infinite when no
/// finite decoy power can reach the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility {
    pub constraint: String,
    pub required_power: f64,
    pub budget: f64,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (minimum decoy power {:.6e}, budget {:.6e})",
            self.constraint, self.required_power, self.budget
        )
    }
}
