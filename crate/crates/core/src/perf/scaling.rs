use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isa::MicroOpTrace;
use crate::perf::traffic::TrafficReport;

/// Single-issue context throughput with a shared memory bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Cycles per second.
    pub clock: f64,
    /// Bytes per cycle, shared by all threads.
    pub bandwidth: f64,
    pub threads: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            clock: 1.0,
            bandwidth: 4.0,
            threads: 1,
        }
    }
}

impl CostModel {
    pub fn new(clock: f64, bandwidth: f64, threads: u32) -> Result<Self> {
        let positive = |x: f64| x > 0.0;
        if !positive(clock) || !positive(bandwidth) || threads == 0 {
            return Err(Error::InvalidConfig(format!(
                "cost model needs positive clock, bandwidth and threads, got {clock}, {bandwidth}, {threads}"
            )));
        }
        Ok(Self {
            clock,
            bandwidth,
            threads,
        })
    }

    pub fn compute_time(&self, cycles: u64, threads: u32) -> f64 {
        cycles as f64 / (f64::from(threads) * self.clock)
    }

    pub fn memory_time(&self, bytes: u64) -> f64 {
        bytes as f64 / (self.bandwidth * self.clock)
    }

    /// Selection cost: issue time plus transfer time.
    pub fn cost(&self, cycles: u64, bytes: u64) -> f64 {
        self.compute_time(cycles, self.threads) + self.memory_time(bytes)
    }
}

/// One micro-op per cycle.
pub fn cycle_estimate(trace: &MicroOpTrace) -> u64 {
    trace.uop_count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub threads: u32,
    pub latency: f64,
    pub bandwidth_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub points: Vec<ScalingPoint>,
}

impl ScalingCurve {
    /// First thread count whose latency is set by bandwidth.
    pub fn crossover(&self) -> Option<u32> {
        self.points.iter().find(|p| p.bandwidth_bound).map(|p| p.threads)
    }

    pub fn latency(&self, threads: u32) -> Option<f64> {
        self.points.iter().find(|p| p.threads == threads).map(|p| p.latency)
    }
}

/// `latency(t) = max(cycles / (t f), bytes / (BW f))` for `t = 1..=max_threads`.
pub fn scaling_estimate(cycles: u64, report: &TrafficReport, model: &CostModel, max_threads: u32) -> ScalingCurve {
    let memory = model.memory_time(report.total_bytes());
    let points = (1..=max_threads.max(1))
        .map(|t| {
            let compute = model.compute_time(cycles, t);
            ScalingPoint {
                threads: t,
                latency: compute.max(memory),
                bandwidth_bound: memory > compute,
            }
        })
        .collect();
    ScalingCurve { points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::traffic::{Category, CountingMode};

    fn bytes(n: u64) -> TrafficReport {
        let mut r = TrafficReport::new(CountingMode::Payload);
        r.add(Category::WeightRead, n, 1);
        r
    }

    #[test]
    fn plateau_example() {
        let model = CostModel::new(1.0, 1.0, 1).unwrap();
        let c = scaling_estimate(1000, &bytes(800), &model, 8);
        assert_eq!(c.crossover(), Some(2));
        assert_eq!(c.latency(1), Some(1000.0));
        assert!(c.points[1..].iter().all(|p| p.latency == 800.0));
    }

    #[test]
    fn infinite_bandwidth_scales_linearly() {
        let model = CostModel::new(1.0, f64::INFINITY, 1).unwrap();
        let c = scaling_estimate(960, &bytes(1 << 30), &model, 16);
        assert_eq!(c.crossover(), None);
        for p in &c.points {
            assert_eq!(p.latency, 960.0 / f64::from(p.threads));
        }
    }

    #[test]
    fn empty_trace_is_free() {
        assert_eq!(cycle_estimate(&MicroOpTrace::summary_only()), 0);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(CostModel::new(0.0, 1.0, 1).is_err());
        assert!(CostModel::new(1.0, f64::NAN, 1).is_err());
        assert!(CostModel::new(1.0, 1.0, 0).is_err());
    }
}
