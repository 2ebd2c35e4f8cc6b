mod common;

use proptest::prelude::*;
use tsar_core::decomp::{decompose_block, pack_weights, recompose_block, unpack_weights, ConfigId, PackedWeightStream};
use tsar_core::isa::{Machine, MicroOpTrace, Register256, VReg};
use tsar_core::kernels::{execute, KernelId, RunOptions};
use tsar_core::par::Execution;
use tsar_core::perf::CountingMode;
use tsar_core::quant::{quantize_activations, quantize_weights, reference_gemm, TernaryMatrix};

fn kernel() -> impl Strategy<Value = KernelId> {
    proptest::sample::select(KernelId::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn activations_stay_in_range(x in proptest::collection::vec(-1e4f32..1e4, 1..200)) {
        let q = quantize_activations(&x).unwrap();
        prop_assert!(q.values().iter().all(|&v| (-127..=127).contains(&v)));
        let absmax = x.iter().fold(0f32, |m, v| m.max(v.abs()));
        if absmax > 1e-3 {
            prop_assert!(q.values().iter().any(|&v| v.abs() == 127));
        }
    }

    #[test]
    fn weights_are_ternary(w in proptest::collection::vec(-3f32..3.0, 1..120)) {
        let t = quantize_weights(&w, 1, w.len()).unwrap();
        prop_assert!(t.values().iter().all(|&v| (-1..=1).contains(&v)));
        prop_assert!(t.scale() > 0.0);
    }

    #[test]
    fn block_dot_product_is_a_difference(block in proptest::collection::vec(-1i8..=1, 4), a in proptest::collection::vec(-127i32..=127, 4)) {
        let b = decompose_block(&block).unwrap();
        prop_assert_eq!(recompose_block(4, b.dense(), b.sparse()).unwrap(), block.clone());
        let sum = |mask: u8| (0..4).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).sum::<i32>();
        let total = sum(0xf);
        let dense = 2 * sum(b.dense()) - total;
        let direct: i32 = block.iter().zip(&a).map(|(&w, &x)| i32::from(w) * x).sum();
        prop_assert_eq!(dense - sum(b.sparse()), direct);
    }

    #[test]
    fn pack_round_trips(seed in any::<u64>(), m in 1usize..70, k in 1usize..90, b in any::<bool>()) {
        let mut rng = common::rng(seed);
        let w = common::ternary(&mut rng, m, k);
        let id = if b { ConfigId::B } else { ConfigId::A };
        let p = pack_weights(&w, id.config());
        prop_assert_eq!(p.payload_bits(), 2 * p.padded_rows() * p.padded_cols());
        let back = unpack_weights(&p).unwrap();
        prop_assert_eq!(back, w.zero_padded(p.padded_rows(), p.padded_cols()).unwrap().with_unit_scale());
        let bytes = p.to_bytes().unwrap();
        prop_assert_eq!(PackedWeightStream::from_bytes(&bytes).unwrap(), p);
    }

    #[test]
    fn tlut_images_obey_the_algebra(seed in any::<u64>(), b in any::<bool>()) {
        let mut rng = common::rng(seed);
        let id = if b { ConfigId::B } else { ConfigId::A };
        let cfg = id.config();
        let a = common::activations(&mut rng, cfg.inputs_per_insn());
        let mut lanes = [0i16; 16];
        for (l, &v) in lanes.iter_mut().zip(a.values()) {
            *l = i16::from(v);
        }
        let mut m = Machine::new(MicroOpTrace::summary_only()).with_overflow_check(true);
        let src = VReg::new(if b { 8 } else { 2 }).unwrap();
        m.regs_mut().set(src, Register256::from_lanes(lanes));
        m.exec_tlut(&cfg, src, VReg::new(0).unwrap()).unwrap();
        let img = m.lut_image(&cfg, VReg::new(0).unwrap()).unwrap();
        prop_assert!(img.satisfies_algebra());
        prop_assert_eq!(img.entries().len(), cfg.blocks() * cfg.lut_entries_per_block());
    }

    #[test]
    fn kernels_match_reference(seed in any::<u64>(), n in 1usize..5, k in 1usize..700, m in 1usize..120, kernel in kernel()) {
        let mut rng = common::rng(seed);
        let w = common::ternary(&mut rng, m, k);
        let rows = common::rows(&mut rng, n, k);
        let p = pack_weights(&w, kernel.kernel_config());
        let run = execute(kernel, &p, &rows, &RunOptions::default()).unwrap();
        prop_assert_eq!(&run.output, &reference_gemm(&w, &rows).unwrap());
    }

    #[test]
    fn sharded_runs_equal_sequential(seed in any::<u64>(), n in 1usize..4, k in 1usize..600, m in 1usize..300, kernel in kernel()) {
        let mut rng = common::rng(seed);
        let w = common::ternary(&mut rng, m, k);
        let rows = common::rows(&mut rng, n, k);
        let p = pack_weights(&w, kernel.kernel_config());
        let go = |execution| {
            let opts = RunOptions { execution, record_trace: true, keep_accesses: true, ..RunOptions::default() };
            execute(kernel, &p, &rows, &opts).unwrap()
        };
        let (s, par) = (go(Execution::Sequential), go(Execution::Parallel));
        prop_assert_eq!(&s.output, &par.output);
        prop_assert_eq!(&s.trace, &par.trace);
        prop_assert_eq!(&s.log, &par.log);
    }

    #[test]
    fn kernels_use_only_planned_registers(seed in any::<u64>(), n in 1usize..8, k in 1usize..300, m in 1usize..250, kernel in kernel()) {
        let mut rng = common::rng(seed);
        let w = common::ternary(&mut rng, m, k);
        let rows = common::rows(&mut rng, n, k);
        let p = pack_weights(&w, kernel.kernel_config());
        let run = execute(kernel, &p, &rows, &RunOptions { record_trace: true, ..RunOptions::default() }).unwrap();
        let allowed = run.plan.regs.mask(&kernel.kernel_config());
        prop_assert!(run.trace.records().iter().all(|r| allowed.union(r.reads).union(r.writes) == allowed));
        prop_assert!(run.trace.within_datapath_limits());
        prop_assert_eq!(run.traffic(CountingMode::Payload).unwrap().lut_bytes(), 0);
    }
}

#[test]
fn zero_weights_give_zero_outputs() {
    let mut rng = common::rng(9);
    let w = TernaryMatrix::zeros(40, 70).unwrap();
    let rows = common::rows(&mut rng, 2, 70);
    for kernel in KernelId::ALL {
        let p = pack_weights(&w, kernel.kernel_config());
        let run = execute(kernel, &p, &rows, &RunOptions::default()).unwrap();
        assert!(run.output.values().iter().all(|&v| v == 0));
    }
}
