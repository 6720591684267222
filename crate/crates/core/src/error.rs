use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("ill-posed network: I - Q(0) has condition number {condition:.3e}")]
    IllPosedNetwork { condition: f64 },

    #[error("rank-deficient known-nonzero block (sigma ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("no support of size <= {k} reproduces the data")]
    InfeasibleAtSparsity { k: usize },

    #[error("sparsest solution is not unique: {0}")]
    Ambiguous(Box<crate::recovery::AmbiguityReport>),

    #[error("linear system is infeasible (relative residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("LP solver did not converge after {iterations} iterations")]
    Solver { iterations: usize },

    #[error("resolution change is singular (condition number {condition:.3e})")]
    ResolutionSingular { condition: f64 },

    #[error("coherence undefined: fewer than two nonzero columns")]
    UndefinedCoherence,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            _ => 2,
        }
    }
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_input_from_numerics() {
        assert_eq!(Error::Parameter("x".into()).exit_code(), 1);
        assert_eq!(Error::Io(std::io::Error::other("x")).exit_code(), 1);
        assert_eq!(Error::RankDeficient { ratio: 0.0 }.exit_code(), 2);
        assert_eq!(Error::IllPosedNetwork { condition: 1e13 }.exit_code(), 2);
        assert_eq!(Error::Solver { iterations: 9 }.exit_code(), 2);
    }
}
