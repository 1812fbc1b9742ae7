//! Library side of the `muskat` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;

/// Reads `MUSKAT_THREADS` and caps the global worker pool accordingly.
pub fn configure_threads(value: Option<&str>) -> Result<Option<usize>, CliError> {
    let Some(raw) = value else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Argument(format!("MUSKAT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(Some(threads))
}
