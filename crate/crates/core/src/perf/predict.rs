//! Closed-form counters for kernel plans and the baseline. These equal the
//! instrumented runs access for access.

use crate::baseline::{BaselineConfig, WORD_INDICES};
use crate::error::Result;
use crate::isa::REGISTER_BYTES;
use crate::kernels::{KernelId, KernelPlan, Schedule};
use crate::perf::traffic::{lines_touched, Category, CountingMode, TrafficReport, LINE_BYTES};
use crate::quant::GemvShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    /// Micro-ops, one cycle each.
    pub cycles: u64,
    pub traffic: TrafficReport,
    pub tlut_calls: u64,
    pub tgemv_calls: u64,
    pub spills: u64,
}

/// Payload bytes and touched lines of a family of accesses.
#[derive(Debug, Clone, Copy, Default)]
struct Span {
    requests: u64,
    bytes: u64,
    lines: u64,
}

impl Span {
    fn aligned(requests: u64, bytes_each: u64) -> Self {
        // Every access of this family starts on a multiple of its size and
        // the size divides 64.
        Self {
            requests,
            bytes: requests * bytes_each,
            lines: requests,
        }
    }

    fn times(self, n: u64) -> Self {
        Self {
            requests: self.requests * n,
            bytes: self.bytes * n,
            lines: self.lines * n,
        }
    }

    fn add(self, o: Span) -> Self {
        Self {
            requests: self.requests + o.requests,
            bytes: self.bytes + o.bytes,
            lines: self.lines + o.lines,
        }
    }

    fn charge(self, report: &mut TrafficReport, c: Category) {
        let bytes = match report.mode {
            CountingMode::Payload => self.bytes,
            CountingMode::Line64 => self.lines * LINE_BYTES,
        };
        report.add(c, bytes, self.requests);
    }
}

/// One access per `(row, segment)` of a row-major buffer: `row * stride +
/// s * seg` with `min(seg, len - s * seg)` elements of `elem` bytes.
fn segments(rows: usize, len: usize, seg: usize, elem: usize) -> Span {
    let mut s = Span::default();
    for r in 0..rows {
        for start in (0..len).step_by(seg) {
            let n = seg.min(len - start);
            let addr = ((r * len + start) * elem) as u64;
            s = s.add(Span {
                requests: 1,
                bytes: (n * elem) as u64,
                lines: lines_touched(addr, (n * elem) as u64),
            });
        }
    }
    s
}

pub fn predict(plan: &KernelPlan, mode: CountingMode) -> Prediction {
    let cfg = plan.config();
    let GemvShape { n, k, m } = plan.shape;
    let (g, t, c) = (plan.groups as u64, plan.tiles as u64, plan.chunks as u64);
    let n64 = n as u64;
    let wr = cfg.weight_registers() as u64;
    let acts_once = segments(n, k, cfg.inputs_per_insn(), 1);
    let outs_once = segments(n, m, cfg.outputs_per_insn(), 4);
    let reg = REGISTER_BYTES as u64;

    let (act, weight, out_read, out_write, spills) = match plan.schedule {
        Schedule::Blocked { .. } => {
            let p = plan.passes() as u64;
            (
                acts_once.times(p),
                Span::aligned(n64 * t * g * wr, reg),
                Span::default(),
                outs_once,
                n64 * t * c,
            )
        }
        Schedule::Streaming => {
            let partials = Span::aligned(n64 * t * (g - c), reg);
            (
                acts_once,
                Span::aligned(n64 * t * g * wr, reg),
                partials.add(outs_once.times(c - 1)),
                partials.add(outs_once.times(c)),
                n64 * t * c,
            )
        }
        Schedule::RowBlocked { .. } => (
            acts_once.times(t),
            Span::aligned(t * g * plan.row_blocks() as u64 * wr, reg),
            Span::default(),
            outs_once,
            n64 * t * c,
        ),
    };
    let mut traffic = TrafficReport::new(mode);
    act.charge(&mut traffic, Category::ActivationRead);
    weight.charge(&mut traffic, Category::WeightRead);
    out_read.charge(&mut traffic, Category::OutputRead);
    out_write.charge(&mut traffic, Category::OutputWrite);

    let (tlut, tgemv) = (plan.tlut_calls(), plan.tgemv_calls());
    let cycles =
        tlut * u64::from(cfg.tlut_uops()) + tgemv * u64::from(cfg.tgemv_uops()) + spills + traffic.total_requests();
    Prediction {
        cycles,
        traffic,
        tlut_calls: tlut,
        tgemv_calls: tgemv,
        spills,
    }
}

pub fn predict_kernel(kernel: KernelId, shape: GemvShape, mode: CountingMode) -> Result<Prediction> {
    Ok(predict(&KernelPlan::new(kernel, shape)?, mode))
}

/// Counters of the memory-LUT baseline.
pub fn predict_baseline(shape: GemvShape, cfg: &BaselineConfig, mode: CountingMode) -> Prediction {
    let GemvShape { n, k, m } = shape;
    let blocks = k.div_ceil(cfg.g);
    let (n64, m64, b64) = (n as u64, m as u64, blocks as u64);
    let act = segments(n, k, cfg.g, 1);
    let lut_write = Span::aligned(n64 * b64, cfg.table_bytes() as u64);
    let lut_read = Span::aligned(n64 * m64 * b64, 2);
    let indices = m * blocks;
    let words = indices.div_ceil(WORD_INDICES);
    let mut weight = Span::default();
    for w in 0..words {
        let bytes = cfg.word_bytes(w, indices) as u64;
        weight = weight.add(Span {
            requests: 1,
            bytes,
            lines: lines_touched(w as u64 * u64::from(cfg.index_bits), bytes),
        });
    }
    let weight = weight.times(n64);
    let out = Span::aligned(n64 * m64, 4);

    let mut traffic = TrafficReport::new(mode);
    act.charge(&mut traffic, Category::ActivationRead);
    weight.charge(&mut traffic, Category::WeightRead);
    lut_read.charge(&mut traffic, Category::LutRead);
    lut_write.charge(&mut traffic, Category::LutWrite);
    out.charge(&mut traffic, Category::OutputWrite);
    let work = n64 * (b64 * cfg.patterns() as u64 + m64 * b64);
    Prediction {
        cycles: work + traffic.total_requests(),
        traffic,
        tlut_calls: 0,
        tgemv_calls: 0,
        spills: 0,
    }
}
