use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The scenario or the command line is malformed.
    #[error("{0}")]
    Malformed(String),
    /// The model is infeasible, unstable or did not converge.
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Malformed(_) => 2,
            CliError::Model(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<mdf_erlang::Error> for CliError {
    fn from(e: mdf_erlang::Error) -> Self {
        use mdf_erlang::Error::*;
        match e {
            Unstable(_) | Infeasible(_) | Divergence(_) | NotConverged { .. } => {
                CliError::Model(e.to_string())
            }
            Domain(_) | Usage(_) | InvalidDistribution(_) => CliError::Malformed(e.to_string()),
        }
    }
}
