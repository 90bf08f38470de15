use hpdr::synth::{field, FieldKind};
use hpdr::ThreadedCpu;
use hpdr::{
    compress_sequential, decompress_sequential, Chunking, CostModel, Executor, HdemConfig,
    Transport,
};
use hpdr_core::codec::ReducerSpec;
use hpdr_core::container::read_container;
use hpdr_core::exec::Serial;
use hpdr_core::pipeline::{
    buffer_conflicts, build_plan_with, check_trace, overlap_ratio, serial_makespan,
    simulate_makespan, Direction, TaskKind, ThroughputModel,
};
use hpdr_core::DType;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sim(cm: CostModel, pairs: usize) -> HdemConfig {
    HdemConfig {
        transport: Transport::Simulated(cm),
        buffer_pairs: pairs,
        ..HdemConfig::default()
    }
}

fn half_copy_costs() -> CostModel {
    CostModel::Constant {
        h2d: 0.5,
        compute: 1.0,
        metadata: 0.0,
        d2h: 0.5,
    }
}

#[test]
fn randomized_runs_match_the_sequential_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let dims = vec![rng.random_range(8..60), rng.random_range(2..9)];
        let kind = FieldKind::ALL[case % 4];
        let u = field(kind, &dims, DType::F32, case as u64).unwrap();
        let spec = match case % 3 {
            0 => ReducerSpec::Mgard {
                eb_rel: 1e-3,
                dict_size: 4096,
            },
            1 => ReducerSpec::Zfp { rate: 10 },
            _ => ReducerSpec::Mgard {
                eb_rel: 1e-5,
                dict_size: 256,
            },
        };
        let cm = CostModel::Roofline {
            throughput: ThroughputModel::saturated(rng.random_range(1e5..1e7)),
            beta_copy: rng.random_range(1e-8..1e-6),
            metadata: rng.random_range(0.0..1e-4),
        };
        let slab = dims[1] * 4;
        let mut ex = Executor::new(Serial::new(), sim(cm, 2 + case % 2));
        let r = ex
            .run_pipeline(&u, &spec, &Chunking::Fixed(slab * rng.random_range(1..12)))
            .unwrap();
        let oracle = compress_sequential(&Serial::new(), &u, &spec, &r.report.chunk_slabs).unwrap();
        assert_eq!(r.bytes, oracle, "case {case}");
        check_trace(&r.report.plan, &r.report.trace).unwrap();
        assert!(buffer_conflicts(&r.report.plan, &r.report.trace).is_empty());
        let back = ex.reconstruct(&r.bytes).unwrap();
        assert_eq!(
            back.data,
            decompress_sequential(&Serial::new(), &r.bytes).unwrap()
        );
        assert!(buffer_conflicts(&back.report.plan, &back.report.trace).is_empty());
    }
}

#[test]
fn ledger_is_clean_over_many_simulated_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..2000 {
        let n = rng.random_range(1..30);
        let dir = if rng.random_bool(0.5) {
            Direction::Reduce
        } else {
            Direction::Reconstruct
        };
        let plan = build_plan_with(n, dir, 2 + rng.random_range(0..2));
        let costs: Vec<f64> = (0..plan.tasks.len())
            .map(|_| rng.random_range(0.0..3.0))
            .collect();
        let trace = simulate_makespan(&plan, &costs);
        check_trace(&plan, &trace).unwrap();
        assert!(buffer_conflicts(&plan, &trace).is_empty());
    }
}

#[test]
fn half_cost_copies_hide_behind_compute() {
    let u = field(FieldKind::Smooth, &[40, 16], DType::F32, 1).unwrap();
    let spec = ReducerSpec::Zfp { rate: 8 };
    let mut ex = Executor::new(Serial::new(), sim(half_copy_costs(), 2));
    let r = ex
        .run_pipeline(&u, &spec, &Chunking::Slabs(vec![4; 10]))
        .unwrap();
    let t = &r.report.trace;
    assert_eq!(t.makespan(), 11.0);
    assert_eq!(serial_makespan(&r.report.costs), 20.0);
    assert!(overlap_ratio(t) >= 0.9);
    assert_eq!(t.total(TaskKind::Compute), 10.0);
}

#[test]
fn three_buffer_pairs_give_the_same_bytes() {
    let u = field(FieldKind::Random, &[33, 7], DType::F64, 4).unwrap();
    let spec = ReducerSpec::Mgard {
        eb_rel: 1e-4,
        dict_size: 4096,
    };
    let chunking = Chunking::Slabs(vec![5, 5, 5, 5, 5, 5, 3]);
    let two = Executor::new(Serial::new(), sim(half_copy_costs(), 2))
        .run_pipeline(&u, &spec, &chunking)
        .unwrap();
    let three = Executor::new(Serial::new(), sim(half_copy_costs(), 3))
        .run_pipeline(&u, &spec, &chunking)
        .unwrap();
    assert_eq!(two.bytes, three.bytes);
    assert!(three.report.trace.makespan() <= two.report.trace.makespan());
}

#[test]
fn real_transport_is_deterministic_across_adapters() {
    let u = field(FieldKind::Smooth, &[64, 12], DType::F32, 9).unwrap();
    let spec = ReducerSpec::Mgard {
        eb_rel: 1e-3,
        dict_size: 4096,
    };
    let chunking = Chunking::Fixed(12 * 4 * 9);
    let a = Executor::new(Serial::new(), HdemConfig::default())
        .run_pipeline(&u, &spec, &chunking)
        .unwrap();
    let mut ex = Executor::new(ThreadedCpu::new(3), HdemConfig::default());
    for _ in 0..5 {
        assert_eq!(
            ex.run_pipeline(&u, &spec, &chunking).unwrap().bytes,
            a.bytes
        );
    }
    let (header, _) = read_container(&a.bytes).unwrap();
    assert_eq!(header.chunks.len(), 8);

    let back = ex.reconstruct(&a.bytes).unwrap().data;
    let (lo, hi) = u.float_range().unwrap();
    let err = u
        .to_f64()
        .unwrap()
        .iter()
        .zip(back.to_f64().unwrap())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(err <= 1e-3 * (hi - lo), "err {err}");
}

#[test]
fn repeated_reductions_reuse_their_context() {
    let u = field(FieldKind::Smooth, &[32, 16], DType::F32, 2).unwrap();
    let spec = ReducerSpec::Mgard {
        eb_rel: 1e-2,
        dict_size: 4096,
    };
    let chunking = Chunking::Slabs(vec![8; 4]);
    let mut ex = Executor::new(Serial::new(), HdemConfig::default());
    ex.run_pipeline(&u, &spec, &chunking).unwrap();
    let once = ex.cache().allocation_events();
    assert!(once > 0);
    for _ in 0..30 {
        ex.run_pipeline(&u, &spec, &chunking).unwrap();
    }
    assert_eq!(ex.cache().allocation_events(), once);
}
