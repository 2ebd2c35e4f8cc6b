use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsar_core::decomp::{pack_weights, ConfigId};
use tsar_core::kernels::{execute, Dataflow, KernelId, RunOptions};
use tsar_core::perf::predict_kernel;
use tsar_core::quant::{QuantizedActivations, TernaryMatrix};

use crate::args::TraceArgs;
use crate::commands::emit;
use crate::config::{KernelChoice, RunConfig};
use crate::error::CliError;

/// Largest trace the command will record.
pub const MAX_TRACE_UOPS: u64 = 65_536;

pub fn cmd_trace(args: &TraceArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&args.common, None)?;
    let [shape] = cfg.shapes[..] else {
        return Err(CliError::Config(format!(
            "trace takes exactly one shape, got {}",
            cfg.shapes.len()
        )));
    };
    let config = cfg.config.unwrap_or(ConfigId::A);
    let kernel = match cfg.kernel {
        KernelChoice::All => KernelId::new(Dataflow::ApMin, config),
        KernelChoice::Dataflow(d) => KernelId::new(d, config),
        KernelChoice::Auto => cfg.kernels_for(shape)[0],
    };
    let predicted = predict_kernel(kernel, shape, cfg.mode)?.cycles;
    if predicted > MAX_TRACE_UOPS {
        return Err(CliError::Guard(format!(
            "{kernel} on {shape} would record {predicted} micro-ops, limit is {MAX_TRACE_UOPS}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w: Vec<i8> = (0..shape.m * shape.k).map(|_| rng.random_range(-1..=1)).collect();
    let w = TernaryMatrix::new(shape.m, shape.k, w, 1.0)?;
    let rows = (0..shape.n)
        .map(|_| QuantizedActivations::from_ints((0..shape.k).map(|_| rng.random_range(-127..=127)).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = RunOptions {
        record_trace: true,
        ..RunOptions::default()
    };
    let run = execute(kernel, &pack_weights(&w, kernel.kernel_config()), &rows, &opts)?;

    let mut dump = Vec::new();
    run.trace.write_dump(&mut dump)?;
    emit(args.common.out.as_deref(), &dump, stdout)?;
    if let Some(path) = &args.common.out {
        writeln!(
            stdout,
            "{kernel} on {shape}: {} instructions, {} micro-ops written to {}",
            run.trace.instruction_count(),
            run.trace.uop_count(),
            path.display()
        )?;
    }
    Ok(())
}
