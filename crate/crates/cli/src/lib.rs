//! Library half of the `arlens` binary: configuration, the track benchmark
//! and the HTTP/WebSocket front end for the session service.

pub mod bench;
pub mod config;
pub mod serve;

use std::path::{Path, PathBuf};

use arlens_core::bundle::{load_bundle, ChartBundle};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// An error that knows which exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            error: error.into(),
        }
    }
}

/// `--chart` accepts a bundle directory, or a bundle id looked up in
/// `bundle_dir`.
pub fn resolve_bundle(chart: &str, bundle_dir: &Path) -> Result<ChartBundle, CliError> {
    let direct = PathBuf::from(chart);
    let dir = if direct.is_dir() {
        direct
    } else {
        bundle_dir.join(chart)
    };
    if !dir.is_dir() {
        return Err(CliError::input(anyhow::anyhow!(
            "no chart bundle '{chart}' (looked in {})",
            bundle_dir.display()
        )));
    }
    load_bundle(&dir).map_err(CliError::input)
}
