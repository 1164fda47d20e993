use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dgeom_core::catalog;
use dgeom_core::connection::{self, ConnectionSelector};
use dgeom_core::curvature;
use dgeom_core::spectral;

fn geometry(c: &mut Criterion) {
    let aniso = catalog::builtin("anisotropic").unwrap();
    let u = [0.3, -0.2, 0.7, 0.4];
    c.bench_function("canonical d-connection (anisotropic)", |b| {
        b.iter(|| connection::canonical_dconnection(&aniso, black_box(&u)).unwrap())
    });
    c.bench_function("d-curvature (anisotropic)", |b| {
        b.iter(|| curvature::d_curvature(&aniso, &ConnectionSelector::Canonical, black_box(&u)).unwrap())
    });
    let randers = catalog::builtin("finsler:randers").unwrap();
    c.bench_function("d-curvature (Randers)", |b| {
        b.iter(|| curvature::d_curvature(&randers, &ConnectionSelector::Canonical, black_box(&u)).unwrap())
    });
    c.bench_function("Seeley densities (anisotropic)", |b| {
        b.iter(|| spectral::seeley_densities(&aniso, &ConnectionSelector::Canonical, 1.0, black_box(&u)).unwrap())
    });
}

criterion_group!(benches, geometry);
criterion_main!(benches);
