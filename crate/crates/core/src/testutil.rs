//! Small helpers shared by unit, property and acceptance tests.

use crate::grid::{Field, GridSpec};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Standard test box: `L = 16 pi`, so `dxi = 1/8` exactly and the integer
/// frequency lattice lies on the grid.
pub fn default_grid(dim: usize, points: usize) -> GridSpec {
    GridSpec::new(dim, 16.0 * PI, points).unwrap()
}

/// Reproducible random field with i.i.d. complex Gaussian-ish samples.
pub fn random_field(spec: GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..spec.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Field::new(spec, values).unwrap()
}

/// Reproducible random field whose spectrum is confined to `|xi|_inf <= kband`.
pub fn random_band_limited(spec: GridSpec, kband: f64, seed: u64) -> Field {
    use crate::grid::{inverse_transform, SpectralField};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = SpectralField::zeros(spec);
    for flat in 0..spec.len() {
        let xi = spec.frequency(spec.multi_index(flat));
        let inside = (0..spec.dim).all(|a| xi[a].abs() <= kband);
        if inside {
            g.coeffs_mut()[flat] =
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    inverse_transform(&g)
}

/// Centered Gaussian `amp * exp(-|x|^2 / (2 sigma^2))`.
pub fn gaussian(spec: GridSpec, amp: f64, sigma: f64) -> Field {
    Field::from_fn(spec, |x| {
        let r2: f64 = (0..spec.dim).map(|a| x[a] * x[a]).sum();
        Complex64::new(amp * (-0.5 * r2 / (sigma * sigma)).exp(), 0.0)
    })
    .unwrap()
}

/// Relative `L^2` distance between two fields on the same grid.
pub fn rel_l2_distance(a: &Field, b: &Field) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.values().iter().zip(b.values()) {
        num += (x - y).norm_sqr();
        den += x.norm_sqr().max(y.norm_sqr());
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}
