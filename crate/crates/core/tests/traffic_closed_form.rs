mod common;

use tsar_core::baseline::{baseline_gemm, BaselineConfig};
use tsar_core::decomp::pack_weights;
use tsar_core::kernels::{execute, KernelId, RunOptions};
use tsar_core::perf::{predict, predict_baseline, Category, CountingMode};
use tsar_core::quant::GemvShape;

const SHAPES: [(usize, usize, usize); 7] = [
    (1, 12, 4),
    (1, 8, 16),
    (2, 300, 40),
    (3, 513, 210),
    (7, 64, 33),
    (1, 1000, 500),
    (6, 257, 17),
];

#[test]
fn kernel_counters_match_closed_forms() {
    let mut rng = common::rng(3);
    for (n, k, m) in SHAPES {
        let w = common::ternary(&mut rng, m, k);
        let rows = common::rows(&mut rng, n, k);
        let shape = GemvShape::new(n, k, m).unwrap();
        for kernel in KernelId::ALL {
            let p = pack_weights(&w, kernel.kernel_config());
            let run = execute(kernel, &p, &rows, &RunOptions::default()).unwrap();
            for mode in [CountingMode::Payload, CountingMode::Line64] {
                let predicted = predict(&run.plan, mode);
                assert_eq!(run.traffic(mode).unwrap(), predicted.traffic, "{kernel} {shape} {mode}");
                assert_eq!(run.cycles(), predicted.cycles, "{kernel} {shape}");
            }
            let s = run.trace.summary();
            assert_eq!(s.instructions(tsar_core::isa::OpClass::Tlut), run.plan.tlut_calls());
            assert_eq!(s.instructions(tsar_core::isa::OpClass::Tgemv), run.plan.tgemv_calls());
            assert_eq!(run.traffic(CountingMode::Payload).unwrap().lut_bytes(), 0);
        }
    }
}

#[test]
fn baseline_counters_match_closed_forms() {
    let mut rng = common::rng(4);
    let cfg = BaselineConfig::default();
    for (n, k, m) in SHAPES {
        let w = common::ternary(&mut rng, m, k);
        let rows = common::rows(&mut rng, n, k);
        let run = baseline_gemm(&w, &rows, &cfg).unwrap();
        let shape = GemvShape::new(n, k, m).unwrap();
        for mode in [CountingMode::Payload, CountingMode::Line64] {
            let predicted = predict_baseline(shape, &cfg, mode);
            assert_eq!(run.traffic(mode).unwrap(), predicted.traffic, "{shape} {mode}");
            assert_eq!(run.cycles, predicted.cycles);
        }
        let r = run.traffic(CountingMode::Payload).unwrap();
        assert!(r.bytes(Category::LutRead) > 0 && r.bytes(Category::LutWrite) > 0);
        let blocks = k.div_ceil(3) as u64;
        assert_eq!(r.bytes(Category::LutRead), (n * m) as u64 * blocks * 2);
        assert_eq!(r.bytes(Category::ActivationRead), (n * k) as u64);
        assert_eq!(r.bytes(Category::OutputWrite), (n * m * 4) as u64);
    }
}

#[test]
fn reruns_are_identical() {
    let mut rng = common::rng(5);
    let w = common::ternary(&mut rng, 100, 300);
    let rows = common::rows(&mut rng, 3, 300);
    for kernel in KernelId::ALL {
        let p = pack_weights(&w, kernel.kernel_config());
        let a = execute(kernel, &p, &rows, &RunOptions::default()).unwrap();
        let b = execute(kernel, &p, &rows, &RunOptions::default()).unwrap();
        assert_eq!(
            a.traffic(CountingMode::Payload).unwrap(),
            b.traffic(CountingMode::Payload).unwrap()
        );
        assert_eq!(a.trace, b.trace);
    }
}
