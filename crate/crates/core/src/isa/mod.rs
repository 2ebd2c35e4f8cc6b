//! Register file, micro-op trace, instruction encoding and the execution
//! engine for the two ternary LUT instructions.

pub mod encoding;
pub mod exec;
pub mod regfile;
pub mod trace;

pub use encoding::{decode_instruction, encode_instruction, valid_instructions, Instruction, INSTRUCTION_BYTES};
pub use exec::{LutImage, Machine, MODELED_REGISTER_BITS};
pub use regfile::{RegGroup, RegMask, Register256, VReg, VectorRegisterFile, LANES, NUM_REGISTERS, REGISTER_BYTES};
pub use trace::{MicroOp, MicroOpTrace, Mnemonic, OpClass, TraceSummary};
