//! The six TLUT/TGEMV kernels and per-shape kernel selection.

pub mod plan;
pub mod run;
pub mod select;

pub use plan::{Dataflow, KernelId, KernelPlan, RegisterMap, Schedule, K_CHUNK};
pub use run::{execute, run_gemm, run_gemv, KernelRun, RunOptions};
pub use select::{kernel_cost, select_kernel};
