use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("H = 2^-{level}: {source}")]
    Level {
        level: u32,
        #[source]
        source: dgms::Error,
    },

    #[error(transparent)]
    Core(dgms::Error),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn at(level: u32) -> impl Fn(dgms::Error) -> Self + Copy {
        move |source| match source {
            dgms::Error::Config(m) => CliError::Config(m),
            source => CliError::Level { level, source },
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

impl From<dgms::Error> for CliError {
    fn from(e: dgms::Error) -> Self {
        match e {
            dgms::Error::Config(m) => CliError::Config(m),
            e => CliError::Core(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
