//! Small filesystem helpers shared by the library and the CLI.

use std::path::Path;

use crate::error::Result;

/// Write `contents` to `path` atomically: the bytes land in a temporary
/// sibling file first and are renamed into place, so a crash never leaves a
/// half-written file at the destination.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp.{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}
