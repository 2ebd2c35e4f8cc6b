use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of one LUT entry and one accumulator lane.
pub const LANE_BITS: u32 = 16;

/// Number of micro-ops a TGEMV is split into.
pub const TGEMV_UOPS: u32 = 4;

/// Instruction parameters: `c` inputs per block, `s` blocks per
/// instruction, `k = c * s` inputs and `m` outputs per TGEMV.
///
/// Only combinations that map onto the SIMD datapath can be constructed:
/// LUT and weight operands fill whole registers, the accumulator is one
/// register of 16-bit lanes, and each TGEMV micro-op fits the lane ALUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelConfig {
    block: u32,
    blocks: u32,
    outputs: u32,
    register_bits: u32,
}

/// `TLUT_2x4` + `TGEMV_8x16` on 256-bit registers.
pub const CONFIG_A: KernelConfig = KernelConfig {
    block: 2,
    blocks: 4,
    outputs: 16,
    register_bits: 256,
};

/// `TLUT_4x4` + `TGEMV_16x16` on 256-bit registers.
pub const CONFIG_B: KernelConfig = KernelConfig {
    block: 4,
    blocks: 4,
    outputs: 16,
    register_bits: 256,
};

impl KernelConfig {
    pub fn new(block: u32, blocks: u32, outputs: u32, register_bits: u32) -> Result<Self> {
        let cfg = Self {
            block,
            blocks,
            outputs,
            register_bits,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{self}: {msg}")));
        if !(1..=4).contains(&self.block) {
            return bad("block size must be in 1..=4".into());
        }
        if self.blocks == 0 {
            return bad("at least one block per instruction".into());
        }
        if ![128, 256, 512].contains(&self.register_bits) {
            return bad("register width must be 128, 256 or 512 bits".into());
        }
        let lanes = self.register_bits / LANE_BITS;
        if self.outputs * LANE_BITS != self.register_bits {
            return bad(format!("m * 16 must equal the register width ({} lanes)", lanes));
        }
        if self.inputs() * LANE_BITS > self.register_bits {
            return bad("k activations must fit one source register".into());
        }
        if !self.lut_bits().is_multiple_of(self.register_bits) || !self.lut_registers().is_power_of_two() {
            return bad("LUT image must fill a power-of-two register group".into());
        }
        if self.lut_registers() > 8 {
            return bad("LUT image exceeds an 8-register group".into());
        }
        if !self.weight_operand_bits().is_multiple_of(self.register_bits)
            || !self.weight_registers().is_power_of_two()
            || self.weight_registers() > 2
        {
            return bad("weight operand must fill one register or an aligned pair".into());
        }
        if !self.outputs.is_multiple_of(TGEMV_UOPS) {
            return bad("m must split evenly over four micro-ops".into());
        }
        if self.outputs * self.blocks / TGEMV_UOPS > lanes || self.outputs / TGEMV_UOPS > 4 {
            return bad("TGEMV micro-op exceeds the lane ALUs or adder trees".into());
        }
        Ok(())
    }

    /// `c`
    pub fn block_size(&self) -> usize {
        self.block as usize
    }

    /// `s`
    pub fn blocks(&self) -> usize {
        self.blocks as usize
    }

    /// `k = c * s`
    pub fn inputs(&self) -> u32 {
        self.block * self.blocks
    }

    pub fn inputs_per_insn(&self) -> usize {
        self.inputs() as usize
    }

    /// `m`
    pub fn outputs_per_insn(&self) -> usize {
        self.outputs as usize
    }

    pub fn register_bits(&self) -> u32 {
        self.register_bits
    }

    /// `2^(c+1)`: sparse half then dense half.
    pub fn lut_entries_per_block(&self) -> usize {
        1 << (self.block + 1)
    }

    pub fn lut_bits(&self) -> u32 {
        self.blocks * (1 << (self.block + 1)) * LANE_BITS
    }

    pub fn lut_registers(&self) -> u32 {
        self.lut_bits() / self.register_bits
    }

    /// Bits of one output channel's lane in the weight operand: `s * 2c`.
    pub fn lane_bits(&self) -> u32 {
        self.blocks * 2 * self.block
    }

    /// One TGEMV weight operand: `m * s * 2c` bits.
    pub fn weight_operand_bits(&self) -> u32 {
        self.outputs * self.lane_bits()
    }

    pub fn weight_operand_bytes(&self) -> usize {
        (self.weight_operand_bits() / 8) as usize
    }

    pub fn weight_registers(&self) -> u32 {
        self.weight_operand_bits() / self.register_bits
    }

    /// One micro-op per register written.
    pub fn tlut_uops(&self) -> u32 {
        self.lut_registers()
    }

    pub fn tgemv_uops(&self) -> u32 {
        TGEMV_UOPS
    }

    pub fn id(&self) -> Option<ConfigId> {
        ConfigId::ALL.into_iter().find(|id| id.config() == *self)
    }
}

impl fmt::Display for KernelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TLUT_{}x{}+TGEMV_{}x{}@{}",
            self.block,
            self.blocks,
            self.inputs(),
            self.outputs,
            self.register_bits
        )
    }
}

/// The two instruction configurations with assigned opcodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfigId {
    A,
    B,
}

impl ConfigId {
    pub const ALL: [ConfigId; 2] = [ConfigId::A, ConfigId::B];

    pub fn config(self) -> KernelConfig {
        match self {
            ConfigId::A => CONFIG_A,
            ConfigId::B => CONFIG_B,
        }
    }

    /// Identifier byte in the packed-stream header.
    pub fn byte(self) -> u8 {
        match self {
            ConfigId::A => 1,
            ConfigId::B => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.byte() == b)
    }

    pub fn letter(self) -> char {
        match self {
            ConfigId::A => 'a',
            ConfigId::B => 'b',
        }
    }
}

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}
