//! File formats, configuration files and run manifests for the `mbwkit`
//! command line. The numerical work lives in `mbwkit-core`.

pub mod config;
pub mod formats;
pub mod manifest;
pub mod lists;

use std::path::PathBuf;

/// Failures of a command, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: config::ConfigError },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: formats::FormatError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] mbwkit_core::Error),
}

impl CliError {
    /// 2 for usage and configuration errors, 3 for bad data, 4 when a
    /// measurement has nothing to measure (no edge, no passage, zero
    /// variance).
    pub fn exit_code(&self) -> i32 {
        use mbwkit_core::Error as E;
        let core = match self {
            CliError::Usage(_) => return 2,
            CliError::Config { source: config::ConfigError::Model(e), .. } => e,
            CliError::Config { .. } => return 2,
            CliError::Format { source: formats::FormatError::Data(e), .. } => e,
            CliError::Format { .. } | CliError::Io { .. } => return 3,
            CliError::Core(e) => e,
        };
        if core.is_numeric() {
            return 4;
        }
        let mut e = core;
        while let E::Transition { source, .. } | E::AtVelocity { source, .. } = e {
            e = source;
        }
        match e {
            E::Config(_) | E::Resolution { .. } | E::InvalidWindow { .. } | E::WindowTooLong { .. } | E::Empty(_) => 2,
            _ => 3,
        }
    }
}
