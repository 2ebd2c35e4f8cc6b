//! Traffic accounting, cycle estimates, the selection cost model and the
//! thread-scaling estimate.

pub mod predict;
pub mod report;
pub mod scaling;
pub mod traffic;

pub use predict::{predict, predict_baseline, predict_kernel, Prediction};
pub use report::{report_csv, report_json};
pub use scaling::{cycle_estimate, scaling_estimate, CostModel, ScalingCurve, ScalingPoint};
pub use traffic::{
    collect_traffic, lines_touched, reduction_ratio, tlut_share, Category, Counter, CountingMode, MemoryLog, Region,
    TrafficReport,
};
