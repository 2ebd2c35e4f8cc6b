use crate::kernels::plan::KernelId;
use crate::perf::predict::predict_kernel;
use crate::perf::scaling::CostModel;
use crate::perf::traffic::CountingMode;
use crate::quant::GemvShape;

/// Estimated cost of `kernel` on `shape` under `model`, from payload-mode
/// closed forms.
pub fn kernel_cost(kernel: KernelId, shape: GemvShape, model: &CostModel) -> f64 {
    let p = predict_kernel(kernel, shape, CountingMode::Payload).expect("valid shape has a plan");
    model.cost(p.cycles, p.traffic.total_bytes())
}

/// Cheapest kernel; ties go to the earlier entry of [`KernelId::ALL`].
pub fn select_kernel(shape: GemvShape, model: &CostModel) -> KernelId {
    let mut best = (KernelId::ALL[0], kernel_cost(KernelId::ALL[0], shape, model));
    for k in &KernelId::ALL[1..] {
        let c = kernel_cost(*k, shape, model);
        if c < best.1 {
            best = (*k, c);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::ConfigId;
    use crate::kernels::Dataflow;

    fn pick(n: usize, k: usize, m: usize) -> KernelId {
        select_kernel(GemvShape::new(n, k, m).unwrap(), &CostModel::default())
    }

    #[test]
    fn degenerate_shapes_follow_tie_break() {
        assert_eq!(pick(1, 8, 16), KernelId::new(Dataflow::ApMin, ConfigId::A));
        assert_eq!(pick(1, 16, 16), KernelId::new(Dataflow::ApMin, ConfigId::B));
    }

    #[test]
    fn wide_outputs_change_dataflow() {
        let small = pick(1, 256, 16);
        let wide = pick(1, 256, 65536);
        assert_ne!(small.dataflow, wide.dataflow);
        assert_eq!(pick(1, 256, 65536), wide);
    }
}
