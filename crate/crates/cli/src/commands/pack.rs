use std::io::Write;

use tsar_core::decomp::pack_weights;

use crate::args::PackArgs;
use crate::config::config_id;
use crate::error::CliError;
use crate::raw::parse_raw;

pub fn cmd_pack(args: &PackArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let raw = std::fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let w = parse_raw(&raw)?;
    let stream = pack_weights(&w, config_id(args.config).config());
    let bytes = stream.to_bytes()?;
    std::fs::write(&args.out, &bytes).map_err(|e| CliError::io(&args.out, e))?;
    writeln!(
        stdout,
        "packed {}x{} weights for {} into {} ({} bytes)",
        w.rows(),
        w.cols(),
        stream.config(),
        args.out.display(),
        bytes.len()
    )?;
    Ok(())
}
