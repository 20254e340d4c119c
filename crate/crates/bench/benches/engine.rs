use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nnmd::domain::{decompose_on, exchange_ghost_positions, GridShape, HaloMode, RankGrid, Transport};
use nnmd::forcefield::{compute_classical, ClassicalParams, CoulombScheme, LjParams};
use nnmd::neighbors::{build_neighbor_list, ListMode};
use nnmd::nnpot::{nn_force_provider, plan_group_preprocessing, ModelSpec, NnModel};
use nnmd::synthetic::{generate_synthetic_system, SyntheticParams, SyntheticSystem};

const SIZES: [usize; 2] = [582, 2643];

fn system(n: usize) -> SyntheticSystem {
    generate_synthetic_system(&SyntheticParams::default().with_size(n)).unwrap()
}

fn params(sys: &SyntheticSystem) -> ClassicalParams {
    ClassicalParams::new(0.7, LjParams::from_per_type(&sys.lj_types()).unwrap(), CoulombScheme::ReactionField, 78.0)
        .unwrap()
}

fn neighbor_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("neighbor_build");
    for n in SIZES {
        let sys = system(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &sys, |b, sys| {
            b.iter(|| build_neighbor_list(&sys.state, &sys.topology, 0.7, 0.1, ListMode::Half).unwrap())
        });
    }
    g.finish();
}

fn classical_forces(c: &mut Criterion) {
    let mut g = c.benchmark_group("classical_forces");
    for n in SIZES {
        let sys = system(n);
        let p = params(&sys);
        let nl = build_neighbor_list(&sys.state, &sys.topology, 0.7, 0.1, ListMode::Half).unwrap();
        let mut state = sys.state.clone();
        g.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| compute_classical(&mut state, &sys.topology, &nl, &p, None).unwrap())
        });
    }
    g.finish();
}

fn nn_inference(c: &mut Criterion) {
    let mut g = c.benchmark_group("nn_inference");
    g.sample_size(10);
    for n in SIZES {
        let sys = system(n);
        let (topo, plan) = plan_group_preprocessing(&sys.topology, "protein").unwrap();
        let n_types = topo.n_types();
        let models = [
            ("embed_fit", ModelSpec::embed_fit(0.6, n_types, 2024)),
            ("message_passing_l3", ModelSpec::message_passing(0.6, n_types, 3, 2024)),
        ];
        for (name, spec) in models {
            let model = NnModel::new(&spec).unwrap();
            let mut state = sys.state.clone();
            g.bench_function(BenchmarkId::new(name, n), |b| {
                b.iter(|| {
                    state.zero_forces();
                    nn_force_provider(&mut state, &topo, &plan, &model).unwrap()
                })
            });
        }
    }
    g.finish();
}

fn halo_exchange(c: &mut Criterion) {
    let mut g = c.benchmark_group("halo_exchange");
    let sys = system(4114);
    for ranks in [2, 8] {
        let layout = decompose_on(&sys.state, RankGrid::new(ranks, GridShape::Balanced).unwrap(), 1.2).unwrap();
        for mode in [HaloMode::Asymmetric, HaloMode::Symmetric] {
            g.bench_function(BenchmarkId::new(format!("{mode:?}"), ranks), |b| {
                b.iter(|| {
                    let mut t = Transport::new(ranks);
                    exchange_ghost_positions(&layout, &sys.state, mode, &mut t).unwrap()
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, neighbor_build, classical_forces, nn_inference, halo_exchange);
criterion_main!(benches);
