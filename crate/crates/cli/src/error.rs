use bloch_core::Error as CoreError;

/// Exit codes: 2 config, 3 solver precondition, 4 numerical failure,
/// 5 self-check violation, 1 I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {0}", .0.kind())]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CoreError::NumericalFailure { .. }
                | CoreError::DegenerateBands { .. }
                | CoreError::BandOverlap { .. }
                | CoreError::Quadrature(_)
                | CoreError::BandFile(_) => 4,
                _ => 3,
            },
            CliError::Io(_) => 1,
            CliError::SelfCheck(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        let t = CliError::from(CoreError::TruncationTooSmall { m: 1, n: 2 });
        assert_eq!(t.exit_code(), 3);
        assert!(t.to_string().starts_with("truncation-too-small"));
        assert_eq!(CliError::from(CoreError::BandOverlap { band: 0, gap: -1.0 }).exit_code(), 4);
        assert_eq!(CliError::SelfCheck("x".into()).exit_code(), 5);
    }
}
