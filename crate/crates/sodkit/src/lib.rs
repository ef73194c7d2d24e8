//! Command-line harness around [`sodkit_core`]: netpbm/PNG and `DUPT`
//! tensor files, TOML run configuration, JSON/CSV evaluation reports, and
//! the `eval`, `forward`, `pr` and `selftest` commands.

pub mod commands;
pub mod config;
mod error;
pub mod image;
pub mod report;
pub mod tensor_file;

pub use error::{Error, Result};

/// Caps the global worker pool at `SODKIT_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SODKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("SODKIT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
