//! Deterministic sample points of the normal bundle.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifold::EmbeddedSubmanifold;
use crate::pq_metric::NormalPoint;

/// Default number of points per preset.
pub const DEFAULT_COUNT: usize = 32;
/// Default seed.
pub const DEFAULT_SEED: u64 = 20_240_517;
/// Distance kept from the domain boundary so nested stencils fit.
pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    /// Fibre components are drawn from `[-t_radius, t_radius]`.
    pub t_radius: f64,
    pub margin: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            count: DEFAULT_COUNT,
            seed: DEFAULT_SEED,
            t_radius: 1.0,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// FNV-1a, used to give every preset its own stream under one seed.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// `spec.count` points `(u, t)` with `u` inside the domain box shrunk by the
/// margin. The sequence depends only on the seed and the chart name.
pub fn sample_points(sub: &EmbeddedSubmanifold, spec: &SampleSpec) -> Vec<NormalPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ name_hash(sub.name()));
    (0..spec.count)
        .map(|_| {
            let u: Vec<f64> = sub
                .domain()
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo + spec.margin..hi - spec.margin))
                .collect();
            let t = DVector::from_fn(sub.codim(), |_, _| {
                rng.random_range(-spec.t_radius..=spec.t_radius)
            });
            NormalPoint::new(u, t)
        })
        .collect()
}
