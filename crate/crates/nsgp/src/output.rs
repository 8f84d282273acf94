//! Atomic file output and content digests.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialize output: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

/// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` when set so that
/// repeated runs can produce identical files.
pub fn timestamp() -> CliResult<u64> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("SOURCE_DATE_EPOCH is not an integer: '{v}'"))),
        Err(_) => Ok(std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)),
    }
}
