use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use photon_gate::cascade;
use photon_gate::optimize::KernelSpec;
use photon_gate::trap::apply_trap;
use photon_gate::TrapParams;
use photon_gate_bench::{cascade, pair, NEAR_OPTIMUM};

fn scatter(c: &mut Criterion) {
    let mut g = c.benchmark_group("scatter_two_photon");
    let kernel = KernelSpec::default().at_detuning(NEAR_OPTIMUM.delta).unwrap();
    for m in [256, 512, 1024] {
        let psi = pair(m);
        g.bench_with_input(BenchmarkId::from_parameter(m), &psi, |b, psi| b.iter(|| kernel.scatter_two_photon(psi.clone()).unwrap()));
    }
    g.finish();
}

fn trap(c: &mut Criterion) {
    let mut g = c.benchmark_group("trap_two_photon");
    let t = TrapParams::symmetric(NEAR_OPTIMUM.lambda1, NEAR_OPTIMUM.lambda2);
    for m in [256, 512, 1024] {
        let psi = pair(m);
        g.bench_with_input(BenchmarkId::from_parameter(m), &psi, |b, psi| b.iter(|| apply_trap(psi.clone(), &t).unwrap()));
    }
    g.finish();
}

fn full_cascade(c: &mut Criterion) {
    let mut g = c.benchmark_group("cascade_overlap");
    g.sample_size(10);
    for n in [3, 9] {
        let cfg = cascade(n, 512, true);
        g.bench_with_input(BenchmarkId::new("m512", n), &cfg, |b, cfg| b.iter(|| cascade::final_overlap(cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, scatter, trap, full_cascade);
criterion_main!(benches);
