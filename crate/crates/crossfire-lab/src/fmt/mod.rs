//! Text formats: the dataset CSV, the versioned model file, the key = value
//! config files, and the output tables. Everything is line-oriented UTF-8
//! with LF endings, and every parser reports the offending line on failure.

pub mod config;
pub mod dataset;
pub mod model_file;
pub mod tables;

use std::path::Path;

use crate::error::Result;

/// Writes a file atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp-{}",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
            std::process::id()
        )),
        None => std::path::PathBuf::from(format!(".atomic.tmp-{}", std::process::id())),
    };
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
