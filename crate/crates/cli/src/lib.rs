//! Command-line front end: argument parsing, presets, raw weight files and
//! the `verify`, `bench`, `pack` and `trace` commands.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod presets;
pub mod raw;

use args::{Cli, Command};
pub use error::CliError;

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Verify(a) => commands::verify::cmd_verify(a, out),
        Command::Bench(a) => commands::bench::cmd_bench(a, out),
        Command::Pack(a) => commands::pack::cmd_pack(a, out),
        Command::Trace(a) => commands::trace::cmd_trace(a, out),
    }
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
