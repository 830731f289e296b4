//! Benchmark groups over the hot paths of the core crate, at the grid sizes
//! the experiments use.

use criterion::{BenchmarkId, Criterion};
use willmore_core::flow::{flow_step, perturbed_clifford, FlowState};
use willmore_core::{
    clifford_torus, decompose, geometry, graph_over, willmore_energy, DecomposeConfig, FlowConfig, ParamGrid,
    SpectralModel,
};

const SIZES: [usize; 3] = [16, 32, 64];

pub fn geometry_and_energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("geometry");
    for n in SIZES {
        let t = perturbed_clifford(ParamGrid::torus(n).unwrap(), 0, 0.05).unwrap();
        group.bench_with_input(BenchmarkId::new("cache", n), &t, |b, t| b.iter(|| geometry(t).unwrap()));
        group.bench_with_input(BenchmarkId::new("energy", n), &t, |b, t| b.iter(|| willmore_energy(t).unwrap()));
    }
    group.finish();
}

pub fn second_variation(c: &mut Criterion) {
    let mut group = c.benchmark_group("w2_apply");
    for n in SIZES {
        let model = SpectralModel::new(n).unwrap();
        let u = model.kernel_basis()[0].map(|x| x * x);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| model.w2_apply(u).unwrap()));
    }
    group.finish();
}

pub fn flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("flow_step");
    let config = FlowConfig::default();
    for n in [16, 32] {
        let state = FlowState::new(perturbed_clifford(ParamGrid::torus(n).unwrap(), 0, 0.05).unwrap(), 1e-3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| b.iter(|| flow_step(s, &config).unwrap()));
    }
    group.finish();
}

pub fn graphs(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    group.sample_size(10);
    for n in [16, 32] {
        let g = ParamGrid::torus(n).unwrap();
        let base = clifford_torus(g).unwrap();
        let target = perturbed_clifford(g, 1, 0.05).unwrap();
        group.bench_with_input(BenchmarkId::new("graph_over", n), &target, |b, t| {
            b.iter(|| graph_over(&base, t).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("decompose", n), &target, |b, t| {
            b.iter(|| decompose(t, &DecomposeConfig::default()).unwrap())
        });
    }
    group.finish();
}
