use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "tsar",
    version,
    about = "Ternary LUT kernel emulator: verify, bench, pack and trace"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every kernel and the baseline against the reference on seeded inputs.
    Verify(VerifyArgs),
    /// Emit cycle and traffic reports per shape and kernel.
    Bench(BenchArgs),
    /// Pack a raw ternary weight file into the TGEMV stream format.
    Pack(PackArgs),
    /// Dump the micro-op trace of one small run.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    ApMin,
    ApMax,
    Op,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConfigArg {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Payload,
    Line64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

/// Shape selection and model parameters shared by the commands.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Named shape preset; repeatable.
    #[arg(long = "preset", value_name = "NAME")]
    pub presets: Vec<String>,
    /// Explicit shape; repeatable.
    #[arg(long = "shape", value_name = "NxKxM")]
    pub shapes: Vec<String>,
    /// TOML file with extra `[[preset]]` tables.
    #[arg(long, value_name = "PATH")]
    pub preset_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    #[arg(long, value_enum)]
    pub config: Option<ConfigArg>,
    /// Include the memory-LUT baseline.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Payload)]
    pub mode: ModeArg,
    /// Memory bandwidth in bytes per cycle.
    #[arg(long, default_value_t = 4.0)]
    pub bw: f64,
    #[arg(long, default_value_t = 64)]
    pub threads_max: u32,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Random instances per shape.
    #[arg(long, default_value_t = 4)]
    pub cases: u32,
    /// Flip one packed weight bit before every run.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct PackArgs {
    /// Raw ternary weight file.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ConfigArg::A)]
    pub config: ConfigArg,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: Common,
}
