use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator library.
///
/// Infeasibility of a *solvable* instance is not an error: solvers report it
/// through [`crate::solvers::SolveStatus::Infeasible`] so that Monte-Carlo
/// drivers can count it. The variants here are hard failures: bad configs,
/// pathological optimizer inputs, blown budgets, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates the model's invariants.
    #[error("config error: {0}")]
    Config(String),

    /// Rejection sampling could not place the requested small cells.
    #[error(
        "topology placement failed after {attempts} rejection rounds (geometry over-constrained)"
    )]
    PlacementFailure { attempts: usize },

    /// A rate target requires a power beyond double-precision range.
    #[error("rate {rate} is infeasible: exponent {exponent:.1} exceeds {max:.0}")]
    InfeasibleRate { rate: f64, exponent: f64, max: f64 },

    /// The bracketing/bisection search exhausted its iteration budget.
    #[error("power search did not converge: {0}")]
    NonConvergence(&'static str),

    /// A user's power floor exceeds its cap at the given bandwidth split.
    #[error(
        "user ({cell},{user}) is infeasible: power floor {lower:.3e} W exceeds cap {upper:.3e} W"
    )]
    InfeasibleUser {
        cell: usize,
        user: usize,
        lower: f64,
        upper: f64,
    },

    /// An instance admits no feasible allocation at all.
    #[error("instance is infeasible: {0}")]
    Infeasible(String),

    /// The exhaustive grid would exceed its evaluation budget.
    #[error("grid budget exceeded: {evaluations:.3e} evaluations > {budget:.3e}")]
    BudgetExceeded { evaluations: f64, budget: f64 },

    /// File I/O failure, with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed JSON input, with the offending path.
    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Parse {
            path: path.into(),
            source,
        }
    }
}
