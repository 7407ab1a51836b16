use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Failure classes, each with its own process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    Config,
    MissingInput,
    Processing,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Config => 3,
            ErrorKind::MissingInput => 4,
            ErrorKind::Processing => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl fmt::Display) -> Self {
        CliError {
            kind,
            message: message.to_string(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn missing(path: &Path) -> Self {
        Self::new(ErrorKind::MissingInput, format!("input not found: {}", path.display()))
    }

    pub fn processing(message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Processing, message)
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "code": self.kind.exit_code(),
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<dnsc_core::synthesis::SynthError> for CliError {
    fn from(e: dnsc_core::synthesis::SynthError) -> Self {
        use dnsc_core::synthesis::SynthError;
        let mut inner = &e;
        while let SynthError::Stage { source, .. } = inner {
            inner = source;
        }
        let kind = match inner {
            SynthError::MissingClip { .. } => ErrorKind::MissingInput,
            SynthError::InvalidConfig(_) => ErrorKind::Config,
            _ => ErrorKind::Processing,
        };
        CliError::new(kind, e)
    }
}

impl From<dnsc_core::testset::TestSetError> for CliError {
    fn from(e: dnsc_core::testset::TestSetError) -> Self {
        use dnsc_core::testset::TestSetError;
        match e {
            TestSetError::Synthesis(s) => s.into(),
            TestSetError::InvalidPlan(_) => CliError::config(e),
            other => CliError::processing(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Fail with [`ErrorKind::MissingInput`] unless `path` exists.
pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::missing(path))
    }
}
