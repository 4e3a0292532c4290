use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use twisted_core::campaign::{random_degree_one, random_matrix, trial_rng};
use twisted_core::linalg::eigen_decompose;
use twisted_core::polyfactor::{expand_factors, refactor, sylvester_swap};
use twisted_core::theta::space::constraint_dimension;
use twisted_core::theta::{det_zeros, mu_theta, multiply};
use twisted_core::{Factorization, Lattice, SpectrumPartition, C64};

fn linalg(c: &mut Criterion) {
    let mut rng = trial_rng(1, 0, 0);
    let a4 = random_matrix(&mut rng, 4);
    c.bench_function("eigen_decompose 4x4", |b| {
        b.iter(|| eigen_decompose(black_box(&a4)).unwrap())
    });

    let (a1, a2) = (random_matrix(&mut rng, 3), random_matrix(&mut rng, 3));
    c.bench_function("sylvester_swap 3x3", |b| {
        b.iter(|| sylvester_swap(black_box(&a1), black_box(&a2)).unwrap())
    });
}

fn polynomials(c: &mut Criterion) {
    let mut rng = trial_rng(2, 0, 0);
    let f = Factorization::new((0..3).map(|_| random_matrix(&mut rng, 3)).collect()).unwrap();
    let p = expand_factors(f.factors()).unwrap();
    let mut labels = f.strand_labels();
    labels.reverse();
    let partition = SpectrumPartition::new(labels.chunks(3).map(<[C64]>::to_vec).collect()).unwrap();
    c.bench_function("refactor m=3 d=3", |b| {
        b.iter(|| refactor(black_box(&p), &partition).unwrap())
    });
}

fn theta(c: &mut Criterion) {
    let l = Lattice::new(C64::new(0.0, 1.0)).unwrap();
    let mut group = c.benchmark_group("theta");
    group.sample_size(20);
    // the basis itself is cached, so time the nullspace computation behind it
    group.bench_function("constraint nullspace m=2 n=2", |b| {
        b.iter(|| constraint_dimension(2, 2, black_box(C64::new(0.1, 0.2)), &l).unwrap())
    });

    let mut rng = trial_rng(3, 0, 0);
    let f = random_degree_one(&mut rng, 2, &l).unwrap();
    let g = random_degree_one(&mut rng, 2, &l).unwrap();
    let h = multiply(&[f.clone(), g.clone()]).unwrap();
    group.bench_function("det_zeros m=2 n=2", |b| b.iter(|| det_zeros(black_box(&h)).unwrap()));

    let mu = mu_theta(2, l);
    group.bench_function("mu_theta m=2", |b| {
        b.iter_batched(
            || (f.clone(), g.clone()),
            |(f, g)| mu.apply(&f, &g).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, linalg, polynomials, theta);
criterion_main!(benches);
