use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{0}")]
    CacheMiss(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::CacheMiss(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::CacheMiss(_) => "cache_miss",
        }
    }

    /// `error[code=N kind=K]: message`, one line.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace('\n', " ");
        format!("error[code={} kind={}]: {msg}", self.code(), self.kind())
    }
}

impl From<quickdet::Error> for CliError {
    fn from(e: quickdet::Error) -> Self {
        match e {
            quickdet::Error::Io(msg) => CliError::Io(msg),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let num: CliError = quickdet::Error::NonConvergence { iterations: 3, last_delta: 0.1 }.into();
        assert_eq!(num.code(), 3);
        let cfg: CliError = quickdet::Error::InvalidParameter("alpha".into()).into();
        assert_eq!(cfg.code(), 2);
        let io: CliError = quickdet::Error::Io("disk".into()).into();
        assert_eq!(io.code(), 1);
        assert_eq!(CliError::CacheMiss("x".into()).line(), "error[code=4 kind=cache_miss]: x");
    }
}
