//! Sequential against rayon-parallel execution of the pairing pipeline.
//! Build with `--no-default-features` to measure the fallback alone.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_rational::Rational64;
use thetapair::bf_pairing::*;
use thetapair::mock_eichler::MockSpec;
use thetapair::modular_group::CongruenceGroup;
use thetapair::par::Execution;
use thetapair::theta_forms::{polygonal_to_lattice, UnaryThetaSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn octagonal_characters(c: &mut Criterion) {
    let f = polygonal_to_lattice(8, 1, 3, 3).unwrap().lattice.source().unwrap();
    let ctx = GroupContext::new(CongruenceGroup::new(108, 12).unwrap(), 10_000).unwrap();
    let mut g = c.benchmark_group("octagonal_theta_characters");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| theta_characters(&f, &ctx, exec).unwrap()));
    }
    g.finish();
}

fn candidate_pairing(c: &mut Criterion) {
    let u = UnaryThetaSpec::new(2, 1, 3).unwrap();
    let h = MockSpec::preimage_of(&u, Rational64::new(1, 4));
    let f = h.shadow();
    let mut g = c.benchmark_group("self_pairing_2_1_3");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = PairingOptions { exec, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| b.iter(|| bf_pair(&f, &h, opts).unwrap()));
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let u = UnaryThetaSpec::new(1, 1, 2).unwrap();
    let quad = QuadratureOptions { u_nodes: 16, v_nodes: 16, ..Default::default() };
    let mut g = c.benchmark_group("petersson_quadrature_1_1_2");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| self_pairing_numeric(&u, None, quad, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, octagonal_characters, candidate_pairing, quadrature);
criterion_main!(benches);
