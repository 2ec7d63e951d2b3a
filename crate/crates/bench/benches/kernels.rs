use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinvqe::{
    apply_ansatz, bond_gate, exact_energy, init_params, lanczos_ground_state, sampled_energy, InitStrategy,
    PauliHamiltonian, ShotBudget, StateVector,
};

const SIZES: [usize; 3] = [8, 12, 16];

fn gate_kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("two_qubit_gate");
    let gate = bond_gate(0.3, 1.0);
    for n in SIZES {
        let mut state = StateVector::bell_pairs(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| state.apply_two_qubit_gate(&gate, n / 2 - 1, n / 2).unwrap())
        });
    }
    group.finish();
}

fn ansatz(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_ansatz");
    for n in SIZES {
        let params = init_params(n / 2, InitStrategy::UniformRandom { seed: 1 }).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| apply_ansatz(black_box(&params), 1.0, n).unwrap())
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("energy");
    for n in SIZES {
        let h = PauliHamiltonian::isotropic(n, 1.0).unwrap();
        let params = init_params(n / 2, InitStrategy::UniformRandom { seed: 1 }).unwrap();
        let state = apply_ansatz(&params, 1.0, n).unwrap();
        group.bench_with_input(BenchmarkId::new("exact", n), &n, |b, _| {
            b.iter(|| exact_energy(black_box(&state), &h).unwrap())
        });
        let budget = ShotBudget::new(1024, 7).unwrap();
        group.bench_with_input(BenchmarkId::new("sampled_1024", n), &n, |b, _| {
            b.iter(|| sampled_energy(black_box(&state), &h, budget).unwrap())
        });
    }
    group.finish();
}

fn lanczos(c: &mut Criterion) {
    let mut group = c.benchmark_group("lanczos");
    group.sample_size(10);
    for n in [8, 12, 14] {
        let h = PauliHamiltonian::isotropic(n, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| lanczos_ground_state(&h, 100, 1e-8, 0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gate_kernel, ansatz, energy, lanczos);
criterion_main!(benches);
