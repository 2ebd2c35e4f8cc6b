use crate::decomp::{KernelConfig, PackedWeightStream};
use crate::error::{Error, Result};
use crate::isa::{Machine, MicroOpTrace, Register256, VReg, LANES, REGISTER_BYTES};
use crate::kernels::plan::{KernelId, KernelPlan, Schedule, K_CHUNK};
use crate::par::{map_ordered, Execution};
use crate::perf::traffic::{collect_traffic, CountingMode, MemoryLog, Region, TrafficReport};
use crate::quant::{AccumulatorMatrix, AccumulatorVector, GemvShape, QuantizedActivations};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub execution: Execution,
    /// Keep per-micro-op records, not just counters.
    pub record_trace: bool,
    /// Keep the full access list in the memory log.
    pub keep_accesses: bool,
    /// Fault on 16-bit overflow instead of wrapping.
    pub check_overflow: bool,
    pub chunk_inputs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            execution: Execution::default(),
            record_trace: false,
            keep_accesses: false,
            check_overflow: true,
            chunk_inputs: K_CHUNK,
        }
    }
}

/// Outputs and instrumentation of one kernel execution.
#[derive(Debug, Clone)]
pub struct KernelRun {
    pub plan: KernelPlan,
    pub output: AccumulatorMatrix,
    pub trace: MicroOpTrace,
    pub log: MemoryLog,
}

impl KernelRun {
    pub fn traffic(&self, mode: CountingMode) -> Result<TrafficReport> {
        collect_traffic(&self.log, Some(&self.trace), mode)
    }

    /// Single-issue cycles: one per micro-op.
    pub fn cycles(&self) -> u64 {
        self.trace.uop_count()
    }
}

/// Trace, log and `(offset, values)` output slices of one shard.
type ShardOutput = (MicroOpTrace, MemoryLog, Vec<(usize, Vec<i32>)>);

/// Independent unit of work, in canonical execution order.
#[derive(Debug, Clone, Copy)]
enum Shard {
    Row(usize),
    Pass { row: usize, pass: usize },
    Tile(usize),
}

struct Ctx<'a> {
    plan: KernelPlan,
    cfg: KernelConfig,
    stream: &'a PackedWeightStream,
    /// Row-major N x K.
    acts: Vec<i8>,
    opts: RunOptions,
}

struct Worker<'a> {
    ctx: &'a Ctx<'a>,
    m: Machine,
    log: MemoryLog,
    /// (flat output offset, values)
    out: Vec<(usize, Vec<i32>)>,
}

impl<'a> Worker<'a> {
    fn new(ctx: &'a Ctx<'a>) -> Self {
        let trace = if ctx.opts.record_trace {
            MicroOpTrace::recording()
        } else {
            MicroOpTrace::summary_only()
        };
        Self {
            ctx,
            m: Machine::new(trace).with_overflow_check(ctx.opts.check_overflow),
            log: if ctx.opts.keep_accesses {
                MemoryLog::keeping_accesses()
            } else {
                MemoryLog::new()
            },
            out: Vec::new(),
        }
    }

    fn k_stride(&self) -> usize {
        self.ctx.plan.shape.k
    }

    fn load_activations_and_tlut(&mut self, row: usize, g: usize) -> Result<()> {
        let k = self.ctx.cfg.inputs_per_insn();
        let u = self.ctx.plan.valid_inputs(g);
        let off = row * self.k_stride() + g * k;
        let mut lanes = [0i16; LANES];
        for (l, &a) in lanes.iter_mut().zip(&self.ctx.acts[off..off + u]) {
            *l = i16::from(a);
        }
        self.log.read(Region::Activations, off as u64, u as u32);
        let regs = self.ctx.plan.regs;
        self.m.load(regs.activations, Register256::from_lanes(lanes));
        self.m.exec_tlut(&self.ctx.cfg, regs.activations, regs.lut)
    }

    fn load_weights(&mut self, tile: usize, g: usize) {
        let off = self.ctx.stream.operand_offset(tile, g);
        let bytes = self.ctx.stream.operand(tile, g);
        let base = self.ctx.plan.regs.weights.index();
        for (r, chunk) in bytes.chunks_exact(REGISTER_BYTES).enumerate() {
            self.log.read(
                Region::Weights,
                (off + r * REGISTER_BYTES) as u64,
                REGISTER_BYTES as u32,
            );
            let reg = VReg::new(base + r as u8).expect("weight group in range");
            self.m.load(reg, Register256::from_bytes(chunk));
        }
    }

    fn tgemv(&mut self, acc: VReg) -> Result<()> {
        let regs = self.ctx.plan.regs;
        self.m.exec_tgemv(&self.ctx.cfg, regs.lut, regs.weights, acc)
    }

    /// Spill `acc` and widen it into `sw`.
    fn spill_into(&mut self, acc: VReg, sw: &mut [i32]) {
        let v = self.m.spill(acc);
        for (s, &l) in sw.iter_mut().zip(v.lanes()) {
            *s += i32::from(l);
        }
    }

    fn out_offset(&self, row: usize, tile: usize) -> usize {
        row * self.ctx.plan.shape.m + tile * self.ctx.cfg.outputs_per_insn()
    }

    fn store_outputs(&mut self, row: usize, tile: usize, sw: &[i32]) {
        let v = self.ctx.plan.valid_outputs(tile);
        let off = self.out_offset(row, tile);
        self.log.write(Region::Outputs, off as u64 * 4, v as u32 * 4);
        self.m.scalar_access(true);
        self.out.push((off, sw[..v].to_vec()));
    }

    /// One row through `tiles`, each tile owning an accumulator.
    fn blocked(&mut self, row: usize, tiles: std::ops::Range<usize>) -> Result<()> {
        let plan = self.ctx.plan;
        let m = self.ctx.cfg.outputs_per_insn();
        let mut sw = vec![0i32; tiles.len() * m];
        for i in 0..tiles.len() {
            self.m.clear(plan.regs.accumulator(i));
        }
        for g in 0..plan.groups {
            self.load_activations_and_tlut(row, g)?;
            for (i, t) in tiles.clone().enumerate() {
                self.load_weights(t, g);
                let acc = plan.regs.accumulator(i);
                self.tgemv(acc)?;
                if plan.ends_chunk(g) {
                    self.spill_into(acc, &mut sw[i * m..(i + 1) * m]);
                }
            }
        }
        for (i, t) in tiles.enumerate() {
            self.store_outputs(row, t, &sw[i * m..(i + 1) * m]);
        }
        Ok(())
    }

    fn streaming(&mut self, row: usize) -> Result<()> {
        let plan = self.ctx.plan;
        let m = self.ctx.cfg.outputs_per_insn();
        let acc = plan.regs.accumulator(0);
        let mut partial = vec![Register256::ZERO; plan.tiles];
        let mut out = vec![0i32; plan.tiles * m];
        for g in 0..plan.groups {
            self.load_activations_and_tlut(row, g)?;
            for t in 0..plan.tiles {
                self.load_weights(t, g);
                let slot = ((row * plan.tiles + t) * REGISTER_BYTES) as u64;
                if plan.starts_chunk(g) {
                    self.m.clear(acc);
                } else {
                    self.log.read(Region::Partials, slot, REGISTER_BYTES as u32);
                    self.m.load(acc, partial[t]);
                }
                self.tgemv(acc)?;
                if plan.ends_chunk(g) {
                    let v = plan.valid_outputs(t);
                    let off = self.out_offset(row, t) as u64 * 4;
                    if plan.chunk_of(g) > 0 {
                        self.log.read(Region::Outputs, off, v as u32 * 4);
                        self.m.scalar_access(false);
                    }
                    self.spill_into(acc, &mut out[t * m..(t + 1) * m]);
                    self.log.write(Region::Outputs, off, v as u32 * 4);
                    self.m.scalar_access(true);
                } else {
                    partial[t] = self.m.store(acc);
                    self.log.write(Region::Partials, slot, REGISTER_BYTES as u32);
                }
            }
        }
        for t in 0..plan.tiles {
            let v = plan.valid_outputs(t);
            self.out.push((self.out_offset(row, t), out[t * m..t * m + v].to_vec()));
        }
        Ok(())
    }

    fn row_blocked(&mut self, tile: usize, rows_per_block: usize) -> Result<()> {
        let plan = self.ctx.plan;
        let m = self.ctx.cfg.outputs_per_insn();
        for start in (0..plan.shape.n).step_by(rows_per_block) {
            let rows = start..(start + rows_per_block).min(plan.shape.n);
            let mut sw = vec![0i32; rows.len() * m];
            for i in 0..rows.len() {
                self.m.clear(plan.regs.accumulator(i));
            }
            for g in 0..plan.groups {
                self.load_weights(tile, g);
                for (i, row) in rows.clone().enumerate() {
                    self.load_activations_and_tlut(row, g)?;
                    let acc = plan.regs.accumulator(i);
                    self.tgemv(acc)?;
                    if plan.ends_chunk(g) {
                        self.spill_into(acc, &mut sw[i * m..(i + 1) * m]);
                    }
                }
            }
            for (i, row) in rows.enumerate() {
                self.store_outputs(row, tile, &sw[i * m..(i + 1) * m]);
            }
        }
        Ok(())
    }

    fn run(mut self, shard: Shard) -> Result<ShardOutput> {
        let plan = self.ctx.plan;
        match (shard, plan.schedule) {
            (Shard::Row(row), Schedule::Streaming) => self.streaming(row)?,
            (Shard::Pass { row, pass }, Schedule::Blocked { tiles_per_pass }) => {
                let start = pass * tiles_per_pass;
                self.blocked(row, start..(start + tiles_per_pass).min(plan.tiles))?
            }
            (Shard::Tile(t), Schedule::RowBlocked { rows_per_block }) => self.row_blocked(t, rows_per_block)?,
            _ => unreachable!("shard kind follows the schedule"),
        }
        Ok((self.m.into_trace(), self.log, self.out))
    }
}

fn shards(plan: &KernelPlan) -> Vec<Shard> {
    match plan.schedule {
        Schedule::Streaming => (0..plan.shape.n).map(Shard::Row).collect(),
        Schedule::Blocked { .. } => (0..plan.shape.n)
            .flat_map(|row| (0..plan.passes()).map(move |pass| Shard::Pass { row, pass }))
            .collect(),
        Schedule::RowBlocked { .. } => (0..plan.tiles).map(Shard::Tile).collect(),
    }
}

fn check_rows(stream: &PackedWeightStream, rows: &[QuantizedActivations]) -> Result<Vec<i8>> {
    if rows.is_empty() {
        return Err(Error::InvalidShape("GEMM needs at least one activation row".into()));
    }
    let k = stream.cols();
    let mut acts = Vec::with_capacity(rows.len() * k);
    for (row, a) in rows.iter().enumerate() {
        // Accept rows already padded to the stream's K.
        if a.len() != k && a.len() != stream.padded_cols() {
            return Err(Error::RaggedRows {
                row,
                expected: k,
                found: a.len(),
            });
        }
        acts.extend_from_slice(&a.values()[..k]);
    }
    Ok(acts)
}

/// Execute `kernel` over every activation row, with full instrumentation.
pub fn execute(
    kernel: KernelId,
    stream: &PackedWeightStream,
    rows: &[QuantizedActivations],
    opts: &RunOptions,
) -> Result<KernelRun> {
    let cfg = kernel.kernel_config();
    if stream.config() != cfg {
        return Err(Error::ConfigMismatch {
            kernel: cfg.to_string(),
            stream: stream.config().to_string(),
        });
    }
    let acts = check_rows(stream, rows)?;
    let shape = GemvShape::new(rows.len(), stream.cols(), stream.rows())?;
    let plan = KernelPlan::with_chunk(kernel, shape, opts.chunk_inputs)?;
    let ctx = Ctx {
        plan,
        cfg,
        stream,
        acts,
        opts: *opts,
    };
    let parts = map_ordered(&shards(&plan), opts.execution, |&s| Worker::new(&ctx).run(s));

    let mut trace = if opts.record_trace {
        MicroOpTrace::recording()
    } else {
        MicroOpTrace::summary_only()
    };
    let mut log = MemoryLog::new();
    if opts.keep_accesses {
        log = MemoryLog::keeping_accesses();
    }
    let mut output = AccumulatorMatrix::zeros(shape.n, shape.m);
    for part in parts {
        let (t, l, out) = part?;
        trace.append(t);
        log.merge(l);
        for (off, vals) in out {
            output.values_mut()[off..off + vals.len()].copy_from_slice(&vals);
        }
    }
    Ok(KernelRun {
        plan,
        output,
        trace,
        log,
    })
}

pub fn run_gemv(kernel: KernelId, stream: &PackedWeightStream, a: &QuantizedActivations) -> Result<AccumulatorVector> {
    let run = execute(kernel, stream, std::slice::from_ref(a), &RunOptions::default())?;
    Ok(run.output.to_vector(0))
}

pub fn run_gemm(
    kernel: KernelId,
    stream: &PackedWeightStream,
    rows: &[QuantizedActivations],
) -> Result<AccumulatorMatrix> {
    Ok(execute(kernel, stream, rows, &RunOptions::default())?.output)
}
