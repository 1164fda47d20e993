//! Shared fixtures for the criterion benches.

use dgeom_core::dsl::{parse_field, BundleShape, ScalarField};
use dgeom_core::ncalg::Poly;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random polynomial with small integer coefficients and total degree at most `degree`.
pub fn random_poly(seed: u64, nvars: usize, terms: usize, degree: u32) -> Poly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Poly::zero(nvars);
    for _ in 0..terms {
        let mut e = vec![0u32; nvars];
        for _ in 0..rng.gen_range(0..=degree) {
            e[rng.gen_range(0..nvars)] += 1;
        }
        p.add_term(e, Complex64::new(rng.gen_range(-3..=3) as f64, 0.0));
    }
    p
}

/// Quadratic fields in the chart coordinates, as used for gauge potentials.
pub fn quadratic_fields(seed: u64, shape: BundleShape, count: usize) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars: Vec<String> = (1..=shape.n).map(|i| format!("x{i}")).chain((1..=shape.m).map(|a| format!("y{a}"))).collect();
    (0..count)
        .map(|_| {
            let mut src = format!("{:?}", rng.gen_range(-0.1..0.1));
            for (k, v) in vars.iter().enumerate() {
                src += &format!(" + ({:?})*{v}", rng.gen_range(-0.1..0.1));
                for w in &vars[k..] {
                    src += &format!(" + ({:?})*{v}*{w}", rng.gen_range(-0.1..0.1));
                }
            }
            parse_field(&src, shape).expect("generated fields parse")
        })
        .collect()
}
