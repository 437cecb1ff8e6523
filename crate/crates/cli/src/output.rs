use std::io::{BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed command leaves no partial output.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), String>
where
    F: FnOnce(&mut dyn Write) -> Result<(), String>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| format!("{}: {e}", path.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| format!("{}: {e}", path.display()))?;
    }
    tmp.persist(path).map_err(|e| format!("{}: {}", path.display(), e.error))?;
    Ok(())
}
