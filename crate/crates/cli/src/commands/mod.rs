pub mod optimize;
pub mod pipeline;
pub mod simulate;

use std::fs;
use std::path::Path;

use anyhow::Context as _;

use crate::exit::{CliError, CliResult};

pub fn prepare_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(CliError::runtime)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::runtime)
}

/// Directory that relative paths inside `file` are resolved against.
pub fn base_dir(file: &Path) -> &Path {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}
