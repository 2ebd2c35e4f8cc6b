pub mod baseline;
pub mod decomp;
pub mod error;
pub mod isa;
pub mod kernels;
pub mod par;
pub mod perf;
pub mod quant;

pub use error::{Error, Result};
