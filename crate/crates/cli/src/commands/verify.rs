use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsar_core::baseline::{baseline_gemm, BaselineConfig};
use tsar_core::decomp::pack_weights;
use tsar_core::kernels::{execute, KernelId, RunOptions};
use tsar_core::par::{map_ordered, Execution};
use tsar_core::quant::{quantize_activations, quantize_weights, reference_gemm, GemvShape};

use crate::args::VerifyArgs;
use crate::config::RunConfig;
use crate::error::CliError;

/// Largest output-channel count verified in full; wider layers are sampled.
pub const MAX_VERIFY_M: usize = 128;
pub const MAX_VERIFY_N: usize = 128;

/// Desk-scale stand-in for `shape`: full K, at most 128 output channels
/// and activation rows.
pub fn scaled(shape: GemvShape) -> GemvShape {
    GemvShape {
        n: shape.n.min(MAX_VERIFY_N),
        k: shape.k,
        m: shape.m.min(MAX_VERIFY_M),
    }
}

struct Case {
    seed: u64,
    shape: GemvShape,
    kernels: Vec<KernelId>,
}

#[derive(Default)]
struct Outcome {
    /// One entry per kernel of the case, then the baseline.
    passed: Vec<bool>,
    failure: Option<String>,
}

fn random_instance(
    seed: u64,
    shape: GemvShape,
) -> Result<
    (
        tsar_core::quant::TernaryMatrix,
        Vec<tsar_core::quant::QuantizedActivations>,
    ),
    CliError,
> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f32> = (0..shape.m * shape.k).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let w = quantize_weights(&w, shape.m, shape.k)?;
    let rows = (0..shape.n)
        .map(|_| {
            let x: Vec<f32> = (0..shape.k).map(|_| rng.random_range(-4.0f32..4.0)).collect();
            quantize_activations(&x)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((w, rows))
}

fn check(case: &Case, inject_fault: bool) -> Result<Outcome, CliError> {
    let (w, rows) = random_instance(case.seed, case.shape)?;
    let expect = reference_gemm(&w, &rows)?;
    let mut out = Outcome::default();
    let fail = |out: &mut Outcome, name: &str| {
        out.passed.push(false);
        out.failure
            .get_or_insert_with(|| format!("seed={}, shape={}, kernel={name}", case.seed, case.shape));
    };
    for &kernel in &case.kernels {
        let mut p = pack_weights(&w, kernel.kernel_config());
        if inject_fault {
            p.payload_mut()[0] ^= 1;
        }
        let opts = RunOptions {
            execution: Execution::Sequential,
            ..RunOptions::default()
        };
        match execute(kernel, &p, &rows, &opts) {
            Ok(run) if run.output == expect => out.passed.push(true),
            _ => fail(&mut out, &kernel.to_string()),
        }
    }
    match baseline_gemm(&w, &rows, &BaselineConfig::default()) {
        Ok(run) if run.output == expect => out.passed.push(true),
        _ => fail(&mut out, "baseline"),
    }
    Ok(out)
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&args.common, Some("small"))?;
    let mut cases = Vec::new();
    let mut notes = String::new();
    for &shape in &cfg.shapes {
        let s = scaled(shape);
        if s != shape {
            writeln!(
                notes,
                "note: {shape} verified as {s} (sampled rows and output channels)"
            )
            .unwrap();
        }
        for _ in 0..args.cases {
            cases.push(Case {
                seed: cfg.seed.wrapping_add(cases.len() as u64),
                shape: s,
                kernels: cfg.kernels_for(shape),
            });
        }
    }
    let outcomes = map_ordered(&cases, Execution::default(), |c| check(c, args.inject_fault));

    let mut names: Vec<String> = KernelId::ALL.iter().map(|k| k.to_string()).collect();
    names.push("baseline".into());
    let mut counts = vec![(0u64, 0u64); names.len()];
    let mut first_failure = None;
    for (case, outcome) in cases.iter().zip(outcomes) {
        let outcome = outcome?;
        let slots = case
            .kernels
            .iter()
            .map(|k| KernelId::ALL.iter().position(|x| x == k).expect("known kernel"))
            .chain([names.len() - 1]);
        for (slot, ok) in slots.zip(&outcome.passed) {
            counts[slot].0 += 1;
            counts[slot].1 += u64::from(!ok);
        }
        if first_failure.is_none() {
            first_failure = outcome.failure;
        }
    }

    let mut report = notes;
    writeln!(report, "{:<10} {:>6} {:>10}", "kernel", "cases", "mismatches").unwrap();
    for (name, (cases, bad)) in names.iter().zip(&counts) {
        if *cases > 0 {
            writeln!(report, "{name:<10} {cases:>6} {bad:>10}").unwrap();
        }
    }
    match first_failure {
        Some(f) => {
            stdout.write_all(report.as_bytes())?;
            Err(CliError::Mismatch(f))
        }
        None => {
            writeln!(
                report,
                "ok: {} instances across {} shapes",
                cases.len(),
                cfg.shapes.len()
            )
            .unwrap();
            stdout.write_all(report.as_bytes())?;
            Ok(())
        }
    }
}
