//! Seeded random evaluation points on a bundle chart.
//!
//! Base coordinates are uniform in a box; fiber coordinates get a uniform
//! random direction and a norm uniform in a shell, which keeps them away from
//! the zero section where Finsler metrics degenerate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::BundleShape;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    /// Bounds of every base coordinate.
    pub x_range: [f64; 2],
    /// Bounds of the Euclidean norm of the fiber coordinates.
    pub y_norm: [f64; 2],
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            count: 10,
            seed: 0,
            x_range: [-1.0, 1.0],
            y_norm: [0.1, 2.0],
        }
    }
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        let [x0, x1] = self.x_range;
        let [r0, r1] = self.y_norm;
        if !(x0.is_finite() && x1.is_finite() && x0 <= x1) {
            return Err(Error::Invalid(format!("x_range [{x0}, {x1}] is not an interval")));
        }
        if !(r0.is_finite() && r1.is_finite() && 0.0 <= r0 && r0 <= r1) {
            return Err(Error::Invalid(format!("y_norm [{r0}, {r1}] is not a nonnegative interval")));
        }
        Ok(())
    }

    /// `count` points, identical for identical seeds.
    pub fn points(&self, shape: BundleShape) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok((0..self.count).map(|_| self.draw(&mut rng, shape)).collect())
    }

    fn draw(&self, rng: &mut ChaCha8Rng, shape: BundleShape) -> Vec<f64> {
        let [x0, x1] = self.x_range;
        let mut u: Vec<f64> = (0..shape.n)
            .map(|_| if x0 == x1 { x0 } else { rng.gen_range(x0..x1) })
            .collect();
        if shape.m > 0 {
            let dir = loop {
                let v: Vec<f64> = (0..shape.m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-3 && norm <= 1.0 {
                    break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
                }
            };
            let [r0, r1] = self.y_norm;
            let r = if r0 == r1 { r0 } else { rng.gen_range(r0..r1) };
            u.extend(dir.into_iter().map(|x| r * x));
        }
        u
    }
}

/// Points from the default box with the given count and seed.
pub fn sample_points(shape: BundleShape, count: usize, seed: u64) -> Vec<Vec<f64>> {
    SampleSpec {
        count,
        seed,
        ..SampleSpec::default()
    }
    .points(shape)
    .expect("the default box is valid")
}
