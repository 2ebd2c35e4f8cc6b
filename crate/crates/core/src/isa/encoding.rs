//! VEX-style encoding for TLUT and TGEMV.
//!
//! Layout: `C4 B1 B2 OPC MODRM`.
//!
//! * B1 = `~R X(1) ~B mmmmm(01010)`, where R and B extend `reg` and `rm`.
//! * B2 = `W(0) ~vvvv L(1) pp(00)`, `vvvv` naming the auxiliary register.
//! * MODRM = `11 reg rm`.

use std::fmt;

use crate::decomp::ConfigId;
use crate::error::{DecodeError, Error, Result};
use crate::isa::regfile::{RegGroup, VReg, NUM_REGISTERS};

pub const ESCAPE: u8 = 0xC4;
pub const OPCODE_MAP: u8 = 0x0A;
pub const INSTRUCTION_BYTES: usize = 5;

pub const OPC_TLUT_A: u8 = 0x1C;
pub const OPC_TLUT_B: u8 = 0x1D;
pub const OPC_TGEMV_A: u8 = 0x2C;
pub const OPC_TGEMV_B: u8 = 0x2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// Build the LUT group at `dst` from the activations in `src`.
    Tlut { config: ConfigId, dst: VReg, src: VReg },
    /// `acc += LUT(lut)[weights]`.
    Tgemv {
        config: ConfigId,
        acc: VReg,
        lut: VReg,
        weights: VReg,
    },
}

impl Instruction {
    pub fn config(&self) -> ConfigId {
        match self {
            Instruction::Tlut { config, .. } | Instruction::Tgemv { config, .. } => *config,
        }
    }

    fn opcode(&self) -> u8 {
        match self {
            Instruction::Tlut {
                config: ConfigId::A, ..
            } => OPC_TLUT_A,
            Instruction::Tlut {
                config: ConfigId::B, ..
            } => OPC_TLUT_B,
            Instruction::Tgemv {
                config: ConfigId::A, ..
            } => OPC_TGEMV_A,
            Instruction::Tgemv {
                config: ConfigId::B, ..
            } => OPC_TGEMV_B,
        }
    }

    /// (reg, rm, vvvv) fields.
    fn fields(&self) -> (VReg, VReg, Option<VReg>) {
        match *self {
            Instruction::Tlut { dst, src, .. } => (dst, src, None),
            Instruction::Tgemv { acc, lut, weights, .. } => (acc, lut, Some(weights)),
        }
    }

    /// Register-group alignment and overlap rules for the operands.
    pub fn validate(&self) -> Result<()> {
        let cfg = self.config().config();
        let lut_size = cfg.lut_registers() as u8;
        match *self {
            Instruction::Tlut { dst, src, .. } => {
                let g = RegGroup::new(dst, lut_size)?;
                if g.mask().contains(src) {
                    return Err(Error::RegisterOverlap(format!("{src} inside LUT group {dst}")));
                }
            }
            Instruction::Tgemv { acc, lut, weights, .. } => {
                let l = RegGroup::new(lut, lut_size)?;
                let w = RegGroup::new(weights, cfg.weight_registers() as u8)?;
                if l.mask().intersects(w.mask()) {
                    return Err(Error::RegisterOverlap(format!("LUT {lut} overlaps weights {weights}")));
                }
                if l.mask().union(w.mask()).contains(acc) {
                    return Err(Error::RegisterOverlap(format!("accumulator {acc} overlaps a source")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cfg = self.config().config();
        match self {
            Instruction::Tlut { dst, src, .. } => {
                write!(f, "TLUT_{}x{} {dst}, {src}", cfg.block_size(), cfg.blocks())
            }
            Instruction::Tgemv { acc, lut, weights, .. } => write!(
                f,
                "TGEMV_{}x{} {acc}, {lut}, {weights}",
                cfg.inputs_per_insn(),
                cfg.outputs_per_insn()
            ),
        }
    }
}

pub fn encode_instruction(insn: &Instruction) -> Result<[u8; INSTRUCTION_BYTES]> {
    insn.validate()?;
    let (reg, rm, aux) = insn.fields();
    let (reg, rm) = (reg.index(), rm.index());
    let vvvv = aux.map_or(0, |v| v.index());
    let b1 = (!(reg >> 3) & 1) << 7 | 1 << 6 | (!(rm >> 3) & 1) << 5 | OPCODE_MAP;
    let b2 = (!vvvv & 0xF) << 3 | 1 << 2;
    let modrm = 0xC0 | (reg & 7) << 3 | (rm & 7);
    Ok([ESCAPE, b1, b2, insn.opcode(), modrm])
}

pub fn decode_instruction(bytes: &[u8]) -> Result<Instruction> {
    if bytes.len() < INSTRUCTION_BYTES {
        return Err(DecodeError::Truncated(bytes.len()).into());
    }
    let [esc, b1, b2, opc, modrm] = [bytes[0], bytes[1], bytes[2], bytes[3], bytes[4]];
    if esc != ESCAPE {
        return Err(DecodeError::BadEscape(esc).into());
    }
    if b1 & 0x1F != OPCODE_MAP {
        return Err(DecodeError::BadMap(b1 & 0x1F).into());
    }
    if b1 & 0x40 == 0 {
        return Err(DecodeError::ReservedBits("X").into());
    }
    if b2 & 0x80 != 0 {
        return Err(DecodeError::ReservedBits("W").into());
    }
    if b2 & 0x04 == 0 {
        return Err(DecodeError::ReservedBits("L").into());
    }
    if b2 & 0x03 != 0 {
        return Err(DecodeError::ReservedBits("pp").into());
    }
    if modrm >> 6 != 0b11 {
        return Err(DecodeError::BadModrm(modrm).into());
    }
    let reg = (!b1 >> 7 & 1) << 3 | (modrm >> 3 & 7);
    let rm = (!b1 >> 5 & 1) << 3 | (modrm & 7);
    let vvvv = !b2 >> 3 & 0xF;
    let r = |i: u8| VReg::new(i).expect("4-bit register field");
    let insn = match opc {
        OPC_TLUT_A | OPC_TLUT_B => {
            if vvvv != 0 {
                return Err(DecodeError::UnusedAuxiliary(vvvv).into());
            }
            let config = if opc == OPC_TLUT_A { ConfigId::A } else { ConfigId::B };
            Instruction::Tlut {
                config,
                dst: r(reg),
                src: r(rm),
            }
        }
        OPC_TGEMV_A | OPC_TGEMV_B => Instruction::Tgemv {
            config: if opc == OPC_TGEMV_A { ConfigId::A } else { ConfigId::B },
            acc: r(reg),
            lut: r(rm),
            weights: r(vvvv),
        },
        other => return Err(DecodeError::UnknownOpcode(other).into()),
    };
    insn.validate()
        .map_err(|e| Error::Decode(DecodeError::Operands(e.to_string())))?;
    Ok(insn)
}

/// Every operand combination that passes validation, for both configurations.
pub fn valid_instructions() -> Vec<Instruction> {
    let regs = || (0..NUM_REGISTERS as u8).map(|i| VReg::new(i).unwrap());
    let mut out = Vec::new();
    for config in ConfigId::ALL {
        for dst in regs() {
            for src in regs() {
                let i = Instruction::Tlut { config, dst, src };
                if i.validate().is_ok() {
                    out.push(i);
                }
                for weights in regs() {
                    let i = Instruction::Tgemv {
                        config,
                        acc: dst,
                        lut: src,
                        weights,
                    };
                    if i.validate().is_ok() {
                        out.push(i);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u8) -> VReg {
        VReg::new(i).unwrap()
    }

    #[test]
    fn worked_example() {
        let i = Instruction::Tlut {
            config: ConfigId::A,
            dst: v(8),
            src: v(0),
        };
        assert_eq!(encode_instruction(&i).unwrap(), [0xC4, 0x6A, 0x7C, 0x1C, 0xC0]);
        assert_eq!(decode_instruction(&[0xC4, 0x6A, 0x7C, 0x1C, 0xC0]).unwrap(), i);
        assert_eq!(i.to_string(), "TLUT_2x4 V8, V0");
    }

    #[test]
    fn operand_space_sizes() {
        let all = valid_instructions();
        let count = |f: &dyn Fn(&Instruction) -> bool| all.iter().filter(|i| f(i)).count();
        assert_eq!(
            count(&|i| matches!(
                i,
                Instruction::Tlut {
                    config: ConfigId::A,
                    ..
                }
            )),
            8 * 14
        );
        assert_eq!(
            count(&|i| matches!(
                i,
                Instruction::Tlut {
                    config: ConfigId::B,
                    ..
                }
            )),
            2 * 8
        );
        assert_eq!(
            count(&|i| matches!(
                i,
                Instruction::Tgemv {
                    config: ConfigId::A,
                    ..
                }
            )),
            8 * 14 * 13
        );
        assert_eq!(
            count(&|i| matches!(
                i,
                Instruction::Tgemv {
                    config: ConfigId::B,
                    ..
                }
            )),
            2 * 4 * 6
        );
    }

    #[test]
    fn decode_errors() {
        let ok = [0xC4, 0x6A, 0x7C, 0x1C, 0xC0];
        let with = |i: usize, b: u8| {
            let mut x = ok;
            x[i] = b;
            decode_instruction(&x)
        };
        assert!(matches!(
            decode_instruction(&ok[..4]),
            Err(Error::Decode(DecodeError::Truncated(4)))
        ));
        assert!(matches!(
            with(0, 0xC5),
            Err(Error::Decode(DecodeError::BadEscape(0xC5)))
        ));
        assert!(matches!(with(1, 0x61), Err(Error::Decode(DecodeError::BadMap(1)))));
        assert!(matches!(
            with(1, 0x2A),
            Err(Error::Decode(DecodeError::ReservedBits("X")))
        ));
        assert!(matches!(
            with(2, 0xFC),
            Err(Error::Decode(DecodeError::ReservedBits("W")))
        ));
        assert!(matches!(
            with(2, 0x78),
            Err(Error::Decode(DecodeError::ReservedBits("L")))
        ));
        assert!(matches!(
            with(2, 0x7D),
            Err(Error::Decode(DecodeError::ReservedBits("pp")))
        ));
        assert!(matches!(
            with(3, 0x1E),
            Err(Error::Decode(DecodeError::UnknownOpcode(0x1E)))
        ));
        assert!(matches!(with(4, 0x40), Err(Error::Decode(DecodeError::BadModrm(0x40)))));
        assert!(matches!(
            with(2, 0x74),
            Err(Error::Decode(DecodeError::UnusedAuxiliary(1)))
        ));
        // V9 as LUT base is misaligned for config A.
        assert!(matches!(with(4, 0xC8), Err(Error::Decode(DecodeError::Operands(_)))));
    }

    #[test]
    fn encode_rejects_bad_operands() {
        let i = Instruction::Tgemv {
            config: ConfigId::B,
            acc: v(8),
            lut: v(0),
            weights: v(8),
        };
        assert!(encode_instruction(&i).is_err());
    }
}
