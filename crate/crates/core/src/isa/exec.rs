use crate::decomp::{ConfigId, KernelConfig, LANE_BITS};
use crate::error::{Error, Result};
use crate::isa::encoding::Instruction;
use crate::isa::regfile::{RegGroup, RegMask, Register256, VReg, VectorRegisterFile, LANES};
use crate::isa::trace::{MicroOpTrace, Mnemonic, UopSpec};

/// Register width the emulator models.
pub const MODELED_REGISTER_BITS: u32 = 256;

const MAX_LUT_LANES: usize = 8 * LANES;
const MAX_WEIGHT_BYTES: usize = 64;

/// Register-resident LUT layout: per block, `2^c` sparse entries followed
/// by `2^c` dense entries, blocks consecutive across the register group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LutImage {
    block: usize,
    blocks: usize,
    entries: Vec<i16>,
}

impl LutImage {
    /// Exact (unwrapped) table values for `block` activations per block.
    fn exact_entries(block: usize, activations: &[i16]) -> Vec<i32> {
        let half = 1usize << block;
        let mut out = Vec::with_capacity(activations.len() / block * 2 * half);
        for a in activations.chunks_exact(block) {
            let sparse: Vec<i32> = (0..half)
                .map(|p| (0..block).filter(|i| p >> i & 1 == 1).map(|i| i32::from(a[i])).sum())
                .collect();
            let full = sparse[half - 1];
            out.extend_from_slice(&sparse);
            out.extend(sparse.iter().map(|s| 2 * s - full));
        }
        out
    }

    /// Build the image directly from one TGEMV group of activations.
    pub fn from_activations(cfg: &KernelConfig, activations: &[i16]) -> Result<Self> {
        if activations.len() != cfg.inputs_per_insn() {
            return Err(Error::DimensionMismatch {
                expected: cfg.inputs_per_insn(),
                found: activations.len(),
            });
        }
        let entries = Self::exact_entries(cfg.block_size(), activations)
            .into_iter()
            .map(|v| v as i16)
            .collect();
        Ok(Self {
            block: cfg.block_size(),
            blocks: cfg.blocks(),
            entries,
        })
    }

    pub fn entries(&self) -> &[i16] {
        &self.entries
    }

    pub fn bits(&self) -> usize {
        self.entries.len() * LANE_BITS as usize
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn sparse(&self, t: usize) -> &[i16] {
        let half = 1 << self.block;
        &self.entries[t * 2 * half..t * 2 * half + half]
    }

    pub fn dense(&self, t: usize) -> &[i16] {
        let half = 1 << self.block;
        &self.entries[t * 2 * half + half..(t + 1) * 2 * half]
    }

    /// `S[0] = 0`, `D[p] = 2 S[p] - S[full]`, `D[p] = -D[full ^ p]`, per block.
    pub fn satisfies_algebra(&self) -> bool {
        let full = (1usize << self.block) - 1;
        (0..self.blocks).all(|t| {
            let (s, d) = (self.sparse(t), self.dense(t));
            s[0] == 0
                && (0..=full)
                    .all(|p| d[p] == s[p].wrapping_mul(2).wrapping_sub(s[full]) && d[p] == d[full ^ p].wrapping_neg())
        })
    }
}

/// One execution context: register file, micro-op trace and the overflow
/// fault switch.
#[derive(Debug, Clone)]
pub struct Machine {
    regs: VectorRegisterFile,
    trace: MicroOpTrace,
    check_overflow: bool,
}

fn require_modeled(cfg: &KernelConfig) -> Result<()> {
    if cfg.register_bits() == MODELED_REGISTER_BITS {
        Ok(())
    } else {
        Err(Error::UnsupportedConfig(cfg.to_string()))
    }
}

fn tlut_mnemonic(cfg: &KernelConfig) -> Mnemonic {
    Mnemonic::Tlut {
        c: cfg.block_size() as u8,
        s: cfg.blocks() as u8,
    }
}

fn tgemv_mnemonic(cfg: &KernelConfig) -> Mnemonic {
    Mnemonic::Tgemv {
        k: cfg.inputs_per_insn() as u8,
        m: cfg.outputs_per_insn() as u8,
    }
}

impl Machine {
    pub fn new(trace: MicroOpTrace) -> Self {
        Self {
            regs: VectorRegisterFile::new(),
            trace,
            check_overflow: false,
        }
    }

    /// Fault instead of wrapping when a 16-bit intermediate overflows.
    pub fn with_overflow_check(mut self, on: bool) -> Self {
        self.check_overflow = on;
        self
    }

    pub fn regs(&self) -> &VectorRegisterFile {
        &self.regs
    }

    pub fn regs_mut(&mut self) -> &mut VectorRegisterFile {
        &mut self.regs
    }

    pub fn trace(&self) -> &MicroOpTrace {
        &self.trace
    }

    pub fn into_trace(self) -> MicroOpTrace {
        self.trace
    }

    fn narrow(&self, mnemonic: Mnemonic, lane: usize, value: i32) -> Result<i16> {
        if self.check_overflow && i16::try_from(value).is_err() {
            return Err(Error::OverflowFault {
                mnemonic: mnemonic.to_string(),
                lane,
                value,
            });
        }
        Ok(value as i16)
    }

    /// Generate the dense and sparse LUTs for the `k` activations held in
    /// the low lanes of `src`, writing the image to the group at `dst`.
    pub fn exec_tlut(&mut self, cfg: &KernelConfig, src: VReg, dst: VReg) -> Result<()> {
        require_modeled(cfg)?;
        let group = RegGroup::new(dst, cfg.lut_registers() as u8)?;
        if group.mask().contains(src) {
            return Err(Error::RegisterOverlap(format!(
                "TLUT source {src} inside destination group at {dst}"
            )));
        }
        let mnemonic = tlut_mnemonic(cfg);
        let lanes = self.regs.get(src);
        let acts = &lanes.lanes()[..cfg.inputs_per_insn()];
        let exact = LutImage::exact_entries(cfg.block_size(), acts);
        let mut out = [0i16; MAX_LUT_LANES];
        for (i, &v) in exact.iter().enumerate() {
            out[i] = self.narrow(mnemonic, i, v)?;
        }
        let mut uops = [UopSpec {
            reads: RegMask::of(src),
            writes: RegMask::default(),
            bits_written: MODELED_REGISTER_BITS as u16,
            alu_ops: LANES as u8,
            tree_ops: 0,
        }; 8];
        for (i, reg) in group.regs().enumerate() {
            let mut r = [0i16; LANES];
            r.copy_from_slice(&out[i * LANES..(i + 1) * LANES]);
            self.regs.set(reg, Register256::from_lanes(r));
            uops[i].writes = RegMask::of(reg);
        }
        self.trace.push_instruction(mnemonic, &uops[..group.size() as usize]);
        Ok(())
    }

    /// Fused LUT-driven GEMV-accumulate: for each output channel `j`,
    /// `acc[j] += sum_t D_t[dense(j,t)] - S_t[sparse(j,t)]`.
    pub fn exec_tgemv(&mut self, cfg: &KernelConfig, lut: VReg, weights: VReg, acc: VReg) -> Result<()> {
        require_modeled(cfg)?;
        let lut_group = RegGroup::new(lut, cfg.lut_registers() as u8)?;
        let w_group = RegGroup::new(weights, cfg.weight_registers() as u8)?;
        if lut_group.mask().intersects(w_group.mask()) {
            return Err(Error::RegisterOverlap(format!(
                "TGEMV LUT group {lut} overlaps weights {weights}"
            )));
        }
        if lut_group.mask().union(w_group.mask()).contains(acc) {
            return Err(Error::RegisterOverlap(format!(
                "TGEMV accumulator {acc} overlaps a source group"
            )));
        }
        let mnemonic = tgemv_mnemonic(cfg);
        let (c, s, m) = (cfg.block_size(), cfg.blocks(), cfg.outputs_per_insn());
        let half = 1usize << c;

        let mut table = [0i16; MAX_LUT_LANES];
        for (i, reg) in lut_group.regs().enumerate() {
            table[i * LANES..(i + 1) * LANES].copy_from_slice(self.regs.get(reg).lanes());
        }
        let mut wbytes = [0u8; MAX_WEIGHT_BYTES];
        for (i, reg) in w_group.regs().enumerate() {
            wbytes[i * 32..(i + 1) * 32].copy_from_slice(&self.regs.get(reg).to_bytes());
        }
        let lane_bits = cfg.lane_bits() as usize;
        let idx_mask = (1u64 << c) - 1;

        let mut result = *self.regs.get(acc).lanes();
        for (j, out) in result.iter_mut().enumerate().take(m) {
            let pos = j * lane_bits;
            let mut lane = 0u64;
            for b in 0..lane_bits.div_ceil(8) + 1 {
                let byte = pos / 8 + b;
                if byte < wbytes.len() {
                    lane |= u64::from(wbytes[byte]) << (8 * b);
                }
            }
            lane = lane >> (pos % 8) & ((1u64 << lane_bits) - 1);
            let mut sum = 0i16;
            let mut exact_sum = 0i32;
            for t in 0..s {
                let pair = lane >> (t * 2 * c);
                let dense = (pair & idx_mask) as usize;
                let sparse = (pair >> c & idx_mask) as usize;
                let base = t * 2 * half;
                let d = table[base + half + dense];
                let sp = table[base + sparse];
                let diff = self.narrow(mnemonic, j, i32::from(d) - i32::from(sp))?;
                exact_sum += i32::from(diff);
                sum = self.narrow(mnemonic, j, exact_sum)?;
            }
            *out = self.narrow(mnemonic, j, i32::from(*out) + i32::from(sum))?;
        }
        self.regs.set(acc, Register256::from_lanes(result));

        let per_uop = m / cfg.tgemv_uops() as usize;
        let reads = lut_group.mask().union(w_group.mask()).union(RegMask::of(acc));
        let uop = UopSpec {
            reads,
            writes: RegMask::of(acc),
            bits_written: (per_uop as u32 * LANE_BITS) as u16,
            alu_ops: (per_uop * s) as u8,
            tree_ops: per_uop as u8,
        };
        self.trace.push_instruction(mnemonic, &[uop; 4]);
        Ok(())
    }

    pub fn execute(&mut self, insn: &Instruction) -> Result<()> {
        match *insn {
            Instruction::Tlut { config, dst, src } => self.exec_tlut(&config.config(), src, dst),
            Instruction::Tgemv {
                config,
                acc,
                lut,
                weights,
            } => self.exec_tgemv(&config.config(), lut, weights, acc),
        }
    }

    /// Read back the LUT image held in the group at `base`.
    pub fn lut_image(&self, cfg: &KernelConfig, base: VReg) -> Result<LutImage> {
        let group = RegGroup::new(base, cfg.lut_registers() as u8)?;
        Ok(LutImage {
            block: cfg.block_size(),
            blocks: cfg.blocks(),
            entries: self.regs.group_lanes(&group),
        })
    }

    /// Vector load into `dst`.
    pub fn load(&mut self, dst: VReg, value: Register256) {
        self.regs.set(dst, value);
        self.trace.push_instruction(
            Mnemonic::Load,
            &[UopSpec {
                reads: RegMask::default(),
                writes: RegMask::of(dst),
                bits_written: MODELED_REGISTER_BITS as u16,
                alu_ops: 0,
                tree_ops: 0,
            }],
        );
    }

    /// Vector store from `src`.
    pub fn store(&mut self, src: VReg) -> Register256 {
        self.trace.push_instruction(
            Mnemonic::Store,
            &[UopSpec {
                reads: RegMask::of(src),
                writes: RegMask::default(),
                bits_written: 0,
                alu_ops: 0,
                tree_ops: 0,
            }],
        );
        self.regs.get(src)
    }

    /// Load or store that moves 32-bit software accumulators, outside the
    /// vector register file.
    pub fn scalar_access(&mut self, store: bool) {
        let mnemonic = if store { Mnemonic::Store } else { Mnemonic::Load };
        self.trace.push_instruction(
            mnemonic,
            &[UopSpec {
                reads: RegMask::default(),
                writes: RegMask::default(),
                bits_written: 0,
                alu_ops: 0,
                tree_ops: 0,
            }],
        );
    }

    /// Widen the 16-bit lanes of `acc` out of the register file and zero it.
    pub fn spill(&mut self, acc: VReg) -> Register256 {
        let value = self.regs.get(acc);
        self.regs.set(acc, Register256::ZERO);
        self.trace.push_instruction(
            Mnemonic::Spill,
            &[UopSpec {
                reads: RegMask::of(acc),
                writes: RegMask::of(acc),
                bits_written: MODELED_REGISTER_BITS as u16,
                alu_ops: LANES as u8,
                tree_ops: 0,
            }],
        );
        value
    }

    /// Zeroing idiom. Resolved at rename, so it issues no micro-op.
    pub fn clear(&mut self, reg: VReg) {
        self.regs.set(reg, Register256::ZERO);
    }
}

/// Mnemonic names for a named configuration, as printed in traces.
pub fn mnemonics(id: ConfigId) -> (String, String) {
    let cfg = id.config();
    (tlut_mnemonic(&cfg).to_string(), tgemv_mnemonic(&cfg).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{decompose_block, CONFIG_A, CONFIG_B};
    use crate::isa::trace::OpClass;

    fn v(i: u8) -> VReg {
        VReg::new(i).unwrap()
    }

    fn with_acts(m: &mut Machine, reg: VReg, acts: &[i16]) {
        let mut lanes = [0i16; 16];
        lanes[..acts.len()].copy_from_slice(acts);
        m.regs_mut().set(reg, Register256::from_lanes(lanes));
    }

    /// Weight operand with every block zero except block 0 of channel 0.
    fn single_block_weights(w: [i8; 2]) -> Register256 {
        let zero = decompose_block(&[0, 0]).unwrap();
        let zero_pair = u16::from(zero.dense()) | u16::from(zero.sparse()) << 2;
        let zero_lane = (0..4).fold(0u16, |l, t| l | zero_pair << (4 * t));
        let b = decompose_block(&w).unwrap();
        let first = (zero_lane & !0xf) | u16::from(b.dense()) | u16::from(b.sparse()) << 2;
        let mut lanes = [zero_lane as i16; 16];
        lanes[0] = first as i16;
        Register256::from_lanes(lanes)
    }

    #[test]
    fn tlut_example_block() {
        let mut m = Machine::new(MicroOpTrace::recording());
        with_acts(&mut m, v(0), &[3, 5, 0, 0, 0, 0, 0, 0]);
        m.exec_tlut(&CONFIG_A, v(0), v(8)).unwrap();
        let img = m.lut_image(&CONFIG_A, v(8)).unwrap();
        assert_eq!(img.sparse(0), &[0, 3, 5, 8]);
        assert_eq!(img.dense(0), &[-8, -2, 2, 8]);
        assert!(img.satisfies_algebra());
        assert_eq!(img.bits(), 512);
        assert_eq!(m.trace().summary().uops(OpClass::Tlut), 2);
    }

    #[test]
    fn tlut_zero_activations() {
        let mut m = Machine::new(MicroOpTrace::summary_only());
        m.regs_mut().set(v(1), Register256::from_lanes([9; 16]));
        m.exec_tlut(&CONFIG_A, v(0), v(2)).unwrap();
        let img = m.lut_image(&CONFIG_A, v(2)).unwrap();
        assert!(img.entries().iter().all(|&e| e == 0));
    }

    #[test]
    fn tlut_uop_counts() {
        let mut m = Machine::new(MicroOpTrace::recording());
        m.exec_tlut(&CONFIG_A, v(0), v(8)).unwrap();
        m.exec_tlut(&CONFIG_B, v(8), v(0)).unwrap();
        let recs = m.trace().records();
        assert_eq!(recs.iter().filter(|r| r.seq == 0).count(), 2);
        assert_eq!(recs.iter().filter(|r| r.seq == 1).count(), 8);
        assert!(recs.iter().all(|r| r.bits_written == 256 && r.writes.count() == 1));
    }

    #[test]
    fn tlut_operand_errors() {
        let mut m = Machine::new(MicroOpTrace::summary_only());
        assert!(matches!(
            m.exec_tlut(&CONFIG_A, v(0), v(9)),
            Err(Error::MisalignedGroup { .. })
        ));
        assert!(matches!(
            m.exec_tlut(&CONFIG_A, v(9), v(8)),
            Err(Error::RegisterOverlap(_))
        ));
        assert!(matches!(
            m.exec_tlut(&CONFIG_B, v(0), v(4)),
            Err(Error::MisalignedGroup { .. })
        ));
        assert!(matches!(
            m.exec_tlut(&CONFIG_B, v(3), v(0)),
            Err(Error::RegisterOverlap(_))
        ));
        let neon = KernelConfig::new(2, 4, 8, 128).unwrap();
        assert!(matches!(
            m.exec_tlut(&neon, v(0), v(4)),
            Err(Error::UnsupportedConfig(_))
        ));
        assert_eq!(m.trace().uop_count(), 0);
    }

    #[test]
    fn tgemv_single_block_examples() {
        for (w, expect) in [([1, -1], -2), ([0, 1], 5), ([0, 0], 0)] {
            let mut m = Machine::new(MicroOpTrace::summary_only()).with_overflow_check(true);
            with_acts(&mut m, v(0), &[3, 5, 0, 0, 0, 0, 0, 0]);
            m.exec_tlut(&CONFIG_A, v(0), v(8)).unwrap();
            m.regs_mut().set(v(2), single_block_weights(w));
            m.exec_tgemv(&CONFIG_A, v(8), v(2), v(3)).unwrap();
            let acc = m.regs().get(v(3));
            assert_eq!(acc.lanes()[0], expect, "weights {w:?}");
            assert!(acc.lanes()[1..].iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn tgemv_accumulates_in_place() {
        let mut m = Machine::new(MicroOpTrace::summary_only());
        with_acts(&mut m, v(0), &[3, 5, 0, 0, 0, 0, 0, 0]);
        m.exec_tlut(&CONFIG_A, v(0), v(8)).unwrap();
        m.regs_mut().set(v(2), single_block_weights([1, 1]));
        m.regs_mut().set(v(3), Register256::from_lanes([100; 16]));
        m.exec_tgemv(&CONFIG_A, v(8), v(2), v(3)).unwrap();
        assert_eq!(m.regs().get(v(3)).lanes()[0], 108);
        assert_eq!(m.regs().get(v(3)).lanes()[1], 100);
    }

    #[test]
    fn tgemv_uop_resources() {
        for cfg in [CONFIG_A, CONFIG_B] {
            let mut m = Machine::new(MicroOpTrace::recording());
            let (lut, w, acc) = if cfg == CONFIG_A { (0, 2, 3) } else { (0, 8, 10) };
            m.exec_tgemv(&cfg, v(lut), v(w), v(acc)).unwrap();
            let recs = m.trace().records();
            assert_eq!(recs.len(), 4);
            assert_eq!(recs.iter().map(|r| u32::from(r.alu_ops)).sum::<u32>(), 64);
            assert_eq!(recs.iter().map(|r| u32::from(r.tree_ops)).sum::<u32>(), 16);
            assert!(m.trace().within_datapath_limits());
        }
    }

    #[test]
    fn tgemv_operand_errors() {
        let mut m = Machine::new(MicroOpTrace::summary_only());
        assert!(m.exec_tgemv(&CONFIG_A, v(0), v(1), v(3)).is_err());
        assert!(m.exec_tgemv(&CONFIG_A, v(0), v(2), v(2)).is_err());
        assert!(m.exec_tgemv(&CONFIG_A, v(0), v(2), v(1)).is_err());
        assert!(m.exec_tgemv(&CONFIG_B, v(0), v(9), v(12)).is_err());
        assert!(m.exec_tgemv(&CONFIG_B, v(8), v(0), v(9)).is_err());
    }

    #[test]
    fn overflow_faults_only_when_checked() {
        let run = |check: bool| {
            let mut m = Machine::new(MicroOpTrace::summary_only()).with_overflow_check(check);
            with_acts(&mut m, v(0), &[127; 8]);
            m.exec_tlut(&CONFIG_A, v(0), v(8)).unwrap();
            let all_ones = decompose_block(&[1, 1]).unwrap();
            let pair = u16::from(all_ones.dense()) | u16::from(all_ones.sparse()) << 2;
            let lane = (0..4).fold(0u16, |l, t| l | pair << (4 * t));
            m.regs_mut().set(v(2), Register256::from_lanes([lane as i16; 16]));
            m.regs_mut().set(v(3), Register256::from_lanes([32000; 16]));
            m.exec_tgemv(&CONFIG_A, v(8), v(2), v(3))
                .map(|_| m.regs().get(v(3)).lanes()[0])
        };
        assert!(matches!(run(true), Err(Error::OverflowFault { .. })));
        assert_eq!(run(false).unwrap(), (32000i32 + 1016 - 65536) as i16);
    }
}
