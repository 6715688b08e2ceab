use std::fmt;

use singred_core::cotred::CotredError;
use singred_core::gaugealg::GaugeError;
use singred_core::linops::LinopsError;
use singred_core::lsreduce::ReduceError;
use singred_core::symred::SymredError;

/// Every failure is either a rejected configuration (exit 1) or a numerical
/// breakdown during an accepted run (exit 2).
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self::Numerical(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Numerical(_) => 2,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        let (kind, msg) = match self {
            Self::Validation(m) => ("validation", m),
            Self::Numerical(m) => ("numerical", m),
        };
        format!(
            "{{\"schema\": 1, \"error\": \"{kind}\", \"message\": {}}}",
            serde_json::to_string(msg).unwrap_or_else(|_| "\"<unencodable>\"".into())
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "validation: {m}"),
            Self::Numerical(m) => write!(f, "numerical: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<LinopsError> for CliError {
    fn from(e: LinopsError) -> Self {
        match e {
            LinopsError::SingularExtension | LinopsError::SingularB22 => Self::Numerical(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<ReduceError> for CliError {
    fn from(e: ReduceError) -> Self {
        match e {
            ReduceError::NewtonDivergence => Self::Numerical(e.to_string()),
            ReduceError::Linops(inner) => inner.into(),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<SymredError> for CliError {
    fn from(e: SymredError) -> Self {
        match e {
            SymredError::DimMismatch(_) => Self::Validation(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<CotredError> for CliError {
    fn from(e: CotredError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<GaugeError> for CliError {
    fn from(e: GaugeError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(format!("io: {e}"))
    }
}
