use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub mod bench;
pub mod pack;
pub mod trace;
pub mod verify;

/// Write `text` to `path`, or to `stdout` without one.
pub(crate) fn emit(path: Option<&Path>, text: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => Ok(stdout.write_all(text)?),
    }
}
