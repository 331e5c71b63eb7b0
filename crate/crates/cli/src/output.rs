use std::io::{self, Write};
use std::path::Path;

use tempfile::NamedTempFile;

/// Renders into memory, then either prints to stdout or writes `path`
/// through a sibling temp file and a rename, so a failed run never leaves a
/// partial file behind.
pub fn emit<F>(path: Option<&Path>, render: F) -> Result<(), crate::Failure>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), crate::Failure>,
{
    let mut buf = Vec::new();
    render(&mut buf)?;
    match path {
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&buf)?;
            out.flush()?;
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = NamedTempFile::new_in(dir)?;
            tmp.write_all(&buf)?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| e.error)?;
        }
    }
    Ok(())
}

/// Fails early if `path` cannot be written, before any expensive work.
pub fn check_writable(path: Option<&Path>) -> Result<(), crate::Failure> {
    let Some(p) = path else { return Ok(()) };
    let dir = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(crate::Failure::param(format!(
            "output directory {} does not exist",
            dir.display()
        )));
    }
    if p.is_dir() {
        return Err(crate::Failure::param(format!(
            "{} is a directory",
            p.display()
        )));
    }
    Ok(())
}
