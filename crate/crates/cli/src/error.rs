use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] twisted_dirac::Error),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("verification failed: {0}")]
    Verify(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 for configuration errors, 3 for solver non-convergence, 4 for a
    /// failed verdict under `--verify`, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if is_convergence(e) => 3,
            CliError::Verify(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

fn is_convergence(e: &twisted_dirac::Error) -> bool {
    match e {
        twisted_dirac::Error::Convergence { .. } => true,
        twisted_dirac::Error::Family { source, .. } => is_convergence(source),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let conv = twisted_dirac::Error::Convergence {
            iterations: 1,
            worst_residual: 1.0,
            target: 0.0,
        };
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(conv.clone()).exit_code(), 3);
        let wrapped = twisted_dirac::Error::Family { t: 0.5, source: Box::new(conv) };
        assert_eq!(CliError::Core(wrapped).exit_code(), 3);
        assert_eq!(CliError::Verify("x".into()).exit_code(), 4);
        assert_eq!(CliError::Core(twisted_dirac::Error::Domain("x".into())).exit_code(), 1);
    }
}
