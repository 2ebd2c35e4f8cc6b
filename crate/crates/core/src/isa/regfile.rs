use std::fmt;

use crate::error::{Error, Result};

pub const NUM_REGISTERS: usize = 16;
pub const LANES: usize = 16;
pub const REGISTER_BYTES: usize = 32;

/// Vector register name `V0..V15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VReg(u8);

impl VReg {
    pub fn new(index: u8) -> Result<Self> {
        if (index as usize) < NUM_REGISTERS {
            Ok(Self(index))
        } else {
            Err(Error::RegisterOutOfRange(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }
}

impl fmt::Display for VReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

/// Bitmask over the 16 vector registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RegMask(pub u16);

impl RegMask {
    pub fn of(reg: VReg) -> Self {
        Self(1 << reg.0)
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn contains(self, reg: VReg) -> bool {
        self.0 >> reg.0 & 1 == 1
    }

    pub fn intersects(self, other: Self) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn iter(self) -> impl Iterator<Item = VReg> {
        (0..NUM_REGISTERS as u8).filter(move |i| self.0 >> i & 1 == 1).map(VReg)
    }
}

impl fmt::Display for RegMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "-");
        }
        let names: Vec<String> = self.iter().map(|r| r.to_string()).collect();
        write!(f, "{}", names.join(","))
    }
}

/// Aligned run of `size` consecutive registers starting at `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegGroup {
    base: VReg,
    size: u8,
}

impl RegGroup {
    /// `size` must be a power of two and `base` a multiple of it.
    pub fn new(base: VReg, size: u8) -> Result<Self> {
        let end = base.0 as usize + size as usize;
        if !size.is_power_of_two() || !base.0.is_multiple_of(size) || end > NUM_REGISTERS {
            return Err(Error::MisalignedGroup { base, size });
        }
        Ok(Self { base, size })
    }

    pub fn base(&self) -> VReg {
        self.base
    }

    pub fn size(&self) -> u8 {
        self.size
    }

    pub fn mask(&self) -> RegMask {
        RegMask((((1u32 << self.size) - 1) << self.base.0) as u16)
    }

    pub fn regs(&self) -> impl Iterator<Item = VReg> + '_ {
        (0..self.size).map(move |i| VReg(self.base.0 + i))
    }
}

/// 256-bit register viewed as 16 two's-complement 16-bit lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Register256 {
    lanes: [i16; LANES],
}

impl Register256 {
    pub const ZERO: Self = Self { lanes: [0; LANES] };

    pub fn from_lanes(lanes: [i16; LANES]) -> Self {
        Self { lanes }
    }

    pub fn lanes(&self) -> &[i16; LANES] {
        &self.lanes
    }

    pub fn lanes_mut(&mut self) -> &mut [i16; LANES] {
        &mut self.lanes
    }

    /// Little-endian lane bytes.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        assert_eq!(bytes.len(), REGISTER_BYTES, "a register holds 32 bytes");
        let mut lanes = [0i16; LANES];
        for (lane, b) in lanes.iter_mut().zip(bytes.chunks_exact(2)) {
            *lane = i16::from_le_bytes([b[0], b[1]]);
        }
        Self { lanes }
    }

    pub fn to_bytes(&self) -> [u8; REGISTER_BYTES] {
        let mut out = [0u8; REGISTER_BYTES];
        for (b, lane) in out.chunks_exact_mut(2).zip(self.lanes) {
            b.copy_from_slice(&lane.to_le_bytes());
        }
        out
    }
}

/// Sixteen 256-bit vector registers, all zero at reset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VectorRegisterFile {
    regs: [Register256; NUM_REGISTERS],
}

impl VectorRegisterFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, reg: VReg) -> Register256 {
        self.regs[reg.0 as usize]
    }

    pub fn set(&mut self, reg: VReg, value: Register256) {
        self.regs[reg.0 as usize] = value;
    }

    pub fn read_register(&self, index: u8) -> Result<Register256> {
        VReg::new(index).map(|r| self.get(r))
    }

    pub fn write_register(&mut self, index: u8, value: Register256) -> Result<()> {
        VReg::new(index).map(|r| self.set(r, value))
    }

    /// Lanes of a register group, concatenated in register order.
    pub fn group_lanes(&self, group: &RegGroup) -> Vec<i16> {
        group.regs().flat_map(|r| self.get(r).lanes).collect()
    }

    pub fn group_bytes(&self, group: &RegGroup) -> Vec<u8> {
        group.regs().flat_map(|r| self.get(r).to_bytes()).collect()
    }
}
