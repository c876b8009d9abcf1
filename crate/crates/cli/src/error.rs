use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or schema-violating input.
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] spectral_da_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use spectral_da_core::Error as E;
        match self {
            CliError::Input(_) | CliError::Output(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidSpectrum(_) | E::InvalidCoefficients(_) | E::InvalidArgument(_) => 2,
                E::TailMismatch(_) => 4,
                E::InfeasibleProblem(_) | E::PriorNotTraceClass(_) | E::LowerBoundPositive(_) | E::Unsupported(_) => 3,
            },
        }
    }
}
