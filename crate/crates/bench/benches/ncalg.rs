use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dgeom_bench::random_poly;
use dgeom_core::ncalg::{lie_star, moyal_star, LieStructure, ThetaMatrix};

fn star(c: &mut Criterion) {
    let theta = ThetaMatrix::from_upper(4, &[0.5, -0.25, 1.0, 0.75, -0.5, 0.125]).unwrap();
    let (f, g) = (random_poly(1, 4, 8, 4), random_poly(2, 4, 8, 4));
    c.bench_function("Moyal product, degree 4 in 4 variables", |b| {
        b.iter(|| moyal_star(black_box(&f), black_box(&g), &theta).unwrap())
    });
    let su2 = LieStructure::su2();
    let (p, q) = (random_poly(3, 3, 6, 3), random_poly(4, 3, 6, 3));
    c.bench_function("su(2) Lie product, order 2", |b| {
        b.iter(|| lie_star(black_box(&p), black_box(&q), &su2, 2).unwrap())
    });
}

criterion_group!(benches, star);
criterion_main!(benches);
