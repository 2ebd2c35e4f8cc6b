//! Ternary-to-binary block decomposition and the packed weight stream.

mod block;
mod config;
mod pack;

pub use block::{decompose_block, recompose_block, BlockIndices, MAX_BLOCK};
pub use config::{ConfigId, KernelConfig, CONFIG_A, CONFIG_B, LANE_BITS, TGEMV_UOPS};
pub use pack::{pack_weights, unpack_weights, PackedWeightStream, HEADER_BYTES, STREAM_MAGIC};
