use thiserror::Error;

use crate::isa::VReg;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Reasons an instruction byte sequence fails to decode.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated instruction: need 5 bytes, got {0}")]
    Truncated(usize),
    #[error("bad escape byte {0:#04x}, expected 0xc4")]
    BadEscape(u8),
    #[error("bad opcode map {0:#04x}, expected 0x0a")]
    BadMap(u8),
    #[error("reserved prefix bits set: {0}")]
    ReservedBits(&'static str),
    #[error("unknown opcode {0:#04x}")]
    UnknownOpcode(u8),
    #[error("modrm mode must be register-direct (11b), got {0:#04b}")]
    BadModrm(u8),
    #[error("auxiliary register field must be unused (0b1111) for TLUT, got V{0}")]
    UnusedAuxiliary(u8),
    #[error("invalid register operands: {0}")]
    Operands(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input element at index {index}")]
    NonFinite { index: usize },
    #[error("value {value} at index {index} is not ternary")]
    NotTernary { index: usize, value: i8 },
    #[error("activation {value} at index {index} outside [-127, 127]")]
    ActivationRange { index: usize, value: i8 },
    #[error("invalid scale {0}: must be finite and positive")]
    InvalidScale(f32),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ragged activation rows: row {row} has length {found}, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("integer accumulator overflow")]
    AccumulatorOverflow,
    #[error("invalid kernel configuration: {0}")]
    InvalidConfig(String),
    #[error("block indices violate containment: dense {dense:#b}, sparse {sparse:#b}")]
    Containment { dense: u8, sparse: u8 },
    #[error("packed payload length mismatch: expected {expected} bytes, found {found}")]
    PayloadLength { expected: usize, found: usize },
    #[error("packed lane for channel {row}, input {col} violates containment")]
    PackedContainment { row: usize, col: usize },
    #[error("padding weight at ({row}, {col}) is not zero")]
    NonZeroPadding { row: usize, col: usize },
    #[error("malformed stream: {0}")]
    Format(String),
    #[error("register index {0} out of range (0..16)")]
    RegisterOutOfRange(u8),
    #[error("register group at {base} of size {size} is misaligned or out of range")]
    MisalignedGroup { base: VReg, size: u8 },
    #[error("register operands overlap: {0}")]
    RegisterOverlap(String),
    #[error("configuration {0} cannot execute on the modeled 256-bit register file")]
    UnsupportedConfig(String),
    #[error("16-bit overflow fault in {mnemonic} (lane {lane}, value {value})")]
    OverflowFault { mnemonic: String, lane: usize, value: i32 },
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("kernel config {kernel} does not match packed stream config {stream}")]
    ConfigMismatch { kernel: String, stream: String },
    #[error("unclassified memory access at {addr:#x} ({bytes} bytes)")]
    UnclassifiedAccess { addr: u64, bytes: u32 },
    #[error("log has {log} accesses but trace has {trace} memory micro-ops")]
    IncompleteLog { log: u64, trace: u64 },
    #[error("traffic report total is zero")]
    ZeroTraffic,
}
