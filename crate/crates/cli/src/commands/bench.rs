use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use tsar_core::baseline::BaselineConfig;
use tsar_core::kernels::select_kernel;
use tsar_core::perf::{
    predict_baseline, predict_kernel, reduction_ratio, scaling_estimate, tlut_share, Category, Prediction,
};

use crate::args::{BenchArgs, FormatArg};
use crate::commands::emit;
use crate::config::RunConfig;
use crate::error::CliError;

pub const CSV_HEADER: &str = "n,k,m,kernel,cycles,activation_read,weight_read,lut_read,lut_write,output_read,\
output_write,total_bytes,total_requests,tlut_share,reduction_ratio,auto,crossover";

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub kernel: String,
    pub cycles: u64,
    pub activation_read: u64,
    pub weight_read: u64,
    pub lut_read: u64,
    pub lut_write: u64,
    pub output_read: u64,
    pub output_write: u64,
    pub total_bytes: u64,
    pub total_requests: u64,
    pub tlut_share: f64,
    /// Baseline bytes over this row's bytes.
    pub reduction_ratio: f64,
    /// Kernel the cost model selects for the shape.
    pub auto: String,
    /// First thread count at which the row is bandwidth bound.
    pub crossover: Option<u32>,
}

pub fn bench_rows(cfg: &RunConfig) -> Result<Vec<BenchRow>, CliError> {
    let mut rows = Vec::new();
    for &shape in &cfg.shapes {
        let base = predict_baseline(shape, &BaselineConfig::default(), cfg.mode);
        let auto = select_kernel(shape, &cfg.model).to_string();
        let row = |name: String, p: &Prediction| -> Result<BenchRow, CliError> {
            let t = &p.traffic;
            Ok(BenchRow {
                n: shape.n,
                k: shape.k,
                m: shape.m,
                kernel: name,
                cycles: p.cycles,
                activation_read: t.bytes(Category::ActivationRead),
                weight_read: t.bytes(Category::WeightRead),
                lut_read: t.bytes(Category::LutRead),
                lut_write: t.bytes(Category::LutWrite),
                output_read: t.bytes(Category::OutputRead),
                output_write: t.bytes(Category::OutputWrite),
                total_bytes: t.total_bytes(),
                total_requests: t.total_requests(),
                tlut_share: tlut_share(t)?,
                reduction_ratio: reduction_ratio(&base.traffic, t)?,
                auto: auto.clone(),
                crossover: scaling_estimate(p.cycles, t, &cfg.model, cfg.threads_max).crossover(),
            })
        };
        for kernel in cfg.kernels_for(shape) {
            rows.push(row(kernel.to_string(), &predict_kernel(kernel, shape, cfg.mode)?)?);
        }
        if cfg.baseline {
            rows.push(row("baseline".into(), &base)?);
        }
    }
    Ok(rows)
}

pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let crossover = r.crossover.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{:.6},{},{}",
            r.n,
            r.k,
            r.m,
            r.kernel,
            r.cycles,
            r.activation_read,
            r.weight_read,
            r.lut_read,
            r.lut_write,
            r.output_read,
            r.output_write,
            r.total_bytes,
            r.total_requests,
            r.tlut_share,
            r.reduction_ratio,
            r.auto,
            crossover
        )
        .unwrap();
    }
    s
}

#[derive(Serialize)]
struct JsonReport<'a> {
    mode: String,
    bandwidth: f64,
    threads_max: u32,
    rows: &'a [BenchRow],
}

pub fn render_json(cfg: &RunConfig, rows: &[BenchRow]) -> String {
    let report = JsonReport {
        mode: cfg.mode.to_string(),
        bandwidth: cfg.model.bandwidth,
        threads_max: cfg.threads_max,
        rows,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&args.common, None)?;
    let rows = bench_rows(&cfg)?;
    let text = match cfg.format {
        FormatArg::Csv => render_csv(&rows),
        FormatArg::Json => render_json(&cfg, &rows),
    };
    emit(args.common.out.as_deref(), text.as_bytes(), stdout)
}
