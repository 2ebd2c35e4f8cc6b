use std::fmt;
use std::io::{self, Write};

use crate::isa::regfile::RegMask;

/// Per-micro-op datapath limits of the 256-bit SIMD unit.
pub const MAX_ALU_OPS: u8 = 16;
pub const MAX_TREE_OPS: u8 = 4;
pub const MAX_WRITE_BITS: u16 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mnemonic {
    Tlut {
        c: u8,
        s: u8,
    },
    Tgemv {
        k: u8,
        m: u8,
    },
    /// Memory-to-register or scalar load.
    Load,
    /// Register-to-memory or scalar store.
    Store,
    /// Widen a 16-bit accumulator into 32-bit software accumulators.
    Spill,
}

impl Mnemonic {
    pub fn class(self) -> OpClass {
        match self {
            Mnemonic::Tlut { .. } => OpClass::Tlut,
            Mnemonic::Tgemv { .. } => OpClass::Tgemv,
            Mnemonic::Load => OpClass::Load,
            Mnemonic::Store => OpClass::Store,
            Mnemonic::Spill => OpClass::Spill,
        }
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mnemonic::Tlut { c, s } => write!(f, "TLUT_{c}x{s}"),
            Mnemonic::Tgemv { k, m } => write!(f, "TGEMV_{k}x{m}"),
            Mnemonic::Load => write!(f, "LOAD"),
            Mnemonic::Store => write!(f, "STORE"),
            Mnemonic::Spill => write!(f, "SPILL"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpClass {
    Tlut,
    Tgemv,
    Load,
    Store,
    Spill,
}

impl OpClass {
    pub const ALL: [OpClass; 5] = [
        OpClass::Tlut,
        OpClass::Tgemv,
        OpClass::Load,
        OpClass::Store,
        OpClass::Spill,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MicroOp {
    /// Sequence number of the instruction this micro-op belongs to.
    pub seq: u64,
    pub mnemonic: Mnemonic,
    pub index: u8,
    pub reads: RegMask,
    pub writes: RegMask,
    pub bits_written: u16,
    pub alu_ops: u8,
    pub tree_ops: u8,
}

/// Micro-op description before sequencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct UopSpec {
    pub reads: RegMask,
    pub writes: RegMask,
    pub bits_written: u16,
    pub alu_ops: u8,
    pub tree_ops: u8,
}

/// Aggregate counters, maintained whether or not records are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceSummary {
    instructions: [u64; 5],
    uops: [u64; 5],
    pub alu_ops: u64,
    pub tree_ops: u64,
    pub max_alu_ops: u8,
    pub max_tree_ops: u8,
    pub max_bits_written: u16,
    pub registers: RegMask,
}

impl TraceSummary {
    pub fn instructions(&self, class: OpClass) -> u64 {
        self.instructions[class.slot()]
    }

    pub fn uops(&self, class: OpClass) -> u64 {
        self.uops[class.slot()]
    }

    pub fn total_uops(&self) -> u64 {
        self.uops.iter().sum()
    }

    fn merge(&mut self, other: &TraceSummary) {
        for i in 0..5 {
            self.instructions[i] += other.instructions[i];
            self.uops[i] += other.uops[i];
        }
        self.alu_ops += other.alu_ops;
        self.tree_ops += other.tree_ops;
        self.max_alu_ops = self.max_alu_ops.max(other.max_alu_ops);
        self.max_tree_ops = self.max_tree_ops.max(other.max_tree_ops);
        self.max_bits_written = self.max_bits_written.max(other.max_bits_written);
        self.registers = self.registers.union(other.registers);
    }
}

/// Ordered micro-op log of one execution context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MicroOpTrace {
    records: Option<Vec<MicroOp>>,
    summary: TraceSummary,
    next_seq: u64,
}

impl MicroOpTrace {
    /// Keep every micro-op record.
    pub fn recording() -> Self {
        Self {
            records: Some(Vec::new()),
            ..Self::default()
        }
    }

    /// Keep only aggregate counters.
    pub fn summary_only() -> Self {
        Self::default()
    }

    pub fn is_recording(&self) -> bool {
        self.records.is_some()
    }

    pub(crate) fn push_instruction(&mut self, mnemonic: Mnemonic, uops: &[UopSpec]) {
        let seq = self.next_seq;
        self.next_seq += 1;
        let class = mnemonic.class().slot();
        self.summary.instructions[class] += 1;
        self.summary.uops[class] += uops.len() as u64;
        for (index, u) in uops.iter().enumerate() {
            let s = &mut self.summary;
            s.alu_ops += u64::from(u.alu_ops);
            s.tree_ops += u64::from(u.tree_ops);
            s.max_alu_ops = s.max_alu_ops.max(u.alu_ops);
            s.max_tree_ops = s.max_tree_ops.max(u.tree_ops);
            s.max_bits_written = s.max_bits_written.max(u.bits_written);
            s.registers = s.registers.union(u.reads).union(u.writes);
            if let Some(records) = &mut self.records {
                records.push(MicroOp {
                    seq,
                    mnemonic,
                    index: index as u8,
                    reads: u.reads,
                    writes: u.writes,
                    bits_written: u.bits_written,
                    alu_ops: u.alu_ops,
                    tree_ops: u.tree_ops,
                });
            }
        }
    }

    /// Records in issue order; empty for summary-only traces.
    pub fn records(&self) -> &[MicroOp] {
        self.records.as_deref().unwrap_or(&[])
    }

    pub fn summary(&self) -> &TraceSummary {
        &self.summary
    }

    pub fn instruction_count(&self) -> u64 {
        self.next_seq
    }

    pub fn uop_count(&self) -> u64 {
        self.summary.total_uops()
    }

    pub fn memory_uops(&self) -> u64 {
        self.summary.uops(OpClass::Load) + self.summary.uops(OpClass::Store)
    }

    /// Every micro-op stays within the ALU, adder-tree and write-port limits.
    pub fn within_datapath_limits(&self) -> bool {
        self.summary.max_alu_ops <= MAX_ALU_OPS
            && self.summary.max_tree_ops <= MAX_TREE_OPS
            && self.summary.max_bits_written <= MAX_WRITE_BITS
    }

    /// Append another context's trace, continuing the sequence numbers.
    pub fn append(&mut self, other: MicroOpTrace) {
        let offset = self.next_seq;
        if let Some(records) = &mut self.records {
            records.extend(other.records().iter().map(|r| MicroOp {
                seq: r.seq + offset,
                ..*r
            }));
        }
        self.summary.merge(&other.summary);
        self.next_seq += other.next_seq;
    }

    /// Tab-separated dump: seq, mnemonic, micro-op index, registers read,
    /// registers written, ALU ops, adder-tree ops.
    pub fn write_dump<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for r in self.records() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.seq, r.mnemonic, r.index, r.reads, r.writes, r.alu_ops, r.tree_ops
            )?;
        }
        Ok(())
    }
}
