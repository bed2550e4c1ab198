//! Fourier-multiplier operators and pointwise nonlinearities: Bessel
//! potential, Klein-Gordon propagators, Riesz potential, power and Hartree
//! nonlinearities.
//!
//! Propagator symbol tables are rebuilt from scratch per `(grid, tau, m)`;
//! no trigonometric recurrences, so there is no phase drift across a time
//! grid and Duhamel quadrature is bit-reproducible.

use crate::error::{ModkgError, Result};
use crate::grid::{
    apply_multiplier, apply_real_table, forward_transform, inverse_transform, Field, GridSpec,
    SpectralField,
};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `<xi> = (1 + |xi|^2)^{1/2}` at a grid frequency.
#[inline]
fn bracket_xi(xi: &[f64; 3], dim: usize) -> f64 {
    let xi2: f64 = (0..dim).map(|a| xi[a] * xi[a]).sum();
    (1.0 + xi2).sqrt()
}

/// Bessel potential `J_sigma = (I - Lap)^{sigma/2}`: multiplier `<xi>^sigma`.
pub fn bessel_potential(f: &Field, sigma: f64) -> Field {
    let g = forward_transform(f);
    inverse_transform(&bessel_potential_spectral(&g, sigma))
}

pub fn bessel_potential_spectral(g: &SpectralField, sigma: f64) -> SpectralField {
    let dim = g.spec.dim;
    apply_multiplier(g, |xi| Complex64::new(bracket_xi(xi, dim).powf(sigma), 0.0))
        .expect("<xi>^sigma is finite on the grid")
}

/// `K'(t) = cos(t <xi>)`, the cosine propagator.
pub fn kg_cosine(f: &Field, t: f64) -> Field {
    let g = forward_transform(f);
    inverse_transform(&kg_cosine_spectral(&g, t))
}

pub fn kg_cosine_spectral(g: &SpectralField, t: f64) -> SpectralField {
    let dim = g.spec.dim;
    apply_multiplier(g, |xi| Complex64::new((t * bracket_xi(xi, dim)).cos(), 0.0))
        .expect("cos symbol is finite")
}

/// `K(t) = sin(t <xi>)/<xi>`, the sine propagator; finite at `xi = 0` since
/// the Klein-Gordon mass keeps `<0> = 1`.
pub fn kg_sine(f: &Field, t: f64) -> Field {
    let g = forward_transform(f);
    inverse_transform(&kg_sine_spectral(&g, t))
}

pub fn kg_sine_spectral(g: &SpectralField, t: f64) -> SpectralField {
    let dim = g.spec.dim;
    apply_multiplier(g, |xi| {
        let w = bracket_xi(xi, dim);
        Complex64::new((t * w).sin() / w, 0.0)
    })
    .expect("sin symbol is finite")
}

/// Classical Riesz constant `gamma(alpha, n) = pi^{n/2} 2^alpha
/// Gamma(alpha/2) / Gamma((n-alpha)/2)`.
pub fn riesz_constant(alpha: f64, dim: usize) -> f64 {
    PI.powf(dim as f64 / 2.0) * (2.0f64).powf(alpha) * libm::tgamma(alpha / 2.0)
        / libm::tgamma((dim as f64 - alpha) / 2.0)
}

/// Riesz potential `I_alpha`: multiplier `gamma(alpha,n) |xi|^{-alpha}` with
/// the zero mode projected out.
pub fn riesz_potential(f: &Field, alpha: f64) -> Result<Field> {
    let g = forward_transform(f);
    Ok(inverse_transform(&riesz_potential_spectral(&g, alpha)?))
}

pub fn riesz_potential_spectral(g: &SpectralField, alpha: f64) -> Result<SpectralField> {
    let dim = g.spec.dim;
    if !(alpha > 0.0 && alpha < dim as f64) {
        return Err(ModkgError::AlphaOutOfRange { alpha, n: dim });
    }
    let gamma = riesz_constant(alpha, dim);
    apply_multiplier(g, |xi| {
        let r: f64 = (0..dim).map(|a| xi[a] * xi[a]).sum::<f64>().sqrt();
        if r == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(gamma * r.powf(-alpha), 0.0)
        }
    })
}

/// Pointwise power nonlinearity `sign * |u|^k u`; maps 0 to 0 for every k > 0.
pub fn power_nonlinearity(u: &Field, k: f64, sign: f64) -> Field {
    let values = u
        .values()
        .iter()
        .map(|v| {
            let m = v.norm();
            if m == 0.0 {
                Complex64::default()
            } else {
                sign * m.powf(k) * v
            }
        })
        .collect();
    Field::new(u.spec, values).expect("power nonlinearity preserves finiteness")
}

/// Interpretation of the quadratic factor in the Hartree term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HartreeSquare {
    /// `|u|^2` (complex-safe; the default).
    ModulusSquared,
    /// literal `u^2`.
    Square,
}

/// Hartree nonlinearity `( |x|^{-mu} * u^2 ) u`, realized as
/// `riesz_potential(u^2, n - mu) * u` pointwise.
pub fn hartree_nonlinearity(u: &Field, mu: f64, square: HartreeSquare) -> Result<Field> {
    let dim = u.spec.dim;
    if !(mu > 0.0 && mu < dim as f64) {
        return Err(ModkgError::AlphaOutOfRange { alpha: mu, n: dim });
    }
    let sq = match square {
        HartreeSquare::ModulusSquared => Field::new(
            u.spec,
            u.values().iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect(),
        )?,
        HartreeSquare::Square => {
            Field::new(u.spec, u.values().iter().map(|v| v * v).collect())?
        }
    };
    let potential = riesz_potential(&sq, dim as f64 - mu)?;
    let values = potential
        .values()
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v)
        .collect();
    Field::new(u.spec, values)
}

/// Precomputed propagator symbol tables on the uniform time grid
/// `t = 0, tau, ..., m_max * tau`.
///
/// Entry `m` is the symbol evaluated directly at `t = m * tau`.
#[derive(Debug, Clone)]
pub struct PropagatorCache {
    pub spec: GridSpec,
    pub tau: f64,
    cos_tables: Vec<Vec<f64>>,
    sine_tables: Vec<Vec<f64>>,
    bracket_sqr: Vec<f64>,
}

impl PropagatorCache {
    pub fn new(spec: GridSpec, tau: f64, m_max: usize) -> Self {
        let dim = spec.dim;
        let brackets: Vec<f64> = (0..spec.len())
            .map(|flat| bracket_xi(&spec.frequency(spec.multi_index(flat)), dim))
            .collect();
        let mut cos_tables = Vec::with_capacity(m_max + 1);
        let mut sine_tables = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            let t = m as f64 * tau;
            cos_tables.push(brackets.iter().map(|w| (t * w).cos()).collect());
            sine_tables.push(brackets.iter().map(|w| (t * w).sin() / w).collect());
        }
        let bracket_sqr = brackets.iter().map(|w| w * w).collect();
        Self { spec, tau, cos_tables, sine_tables, bracket_sqr }
    }

    pub fn steps(&self) -> usize {
        self.cos_tables.len() - 1
    }

    /// `cos(m tau <xi>)` table.
    pub fn cosine_table(&self, m: usize) -> &[f64] {
        &self.cos_tables[m]
    }

    /// `sin(m tau <xi>)/<xi>` table.
    pub fn sine_table(&self, m: usize) -> &[f64] {
        &self.sine_tables[m]
    }

    /// `<xi>^2` table (the symbol of `omega = I - Lap`).
    pub fn omega_table(&self) -> &[f64] {
        &self.bracket_sqr
    }

    pub fn apply_cosine(&self, g: &SpectralField, m: usize) -> SpectralField {
        apply_real_table(g, &self.cos_tables[m]).expect("table matches grid")
    }

    pub fn apply_sine(&self, g: &SpectralField, m: usize) -> SpectralField {
        apply_real_table(g, &self.sine_tables[m]).expect("table matches grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm;
    use crate::norms::{modulation_norm, SpaceParams};
    use crate::testutil::{default_grid, gaussian, random_band_limited, rel_l2_distance};

    #[test]
    fn bessel_zero_order_is_identity() {
        let spec = default_grid(1, 128);
        let f = random_band_limited(spec, 2.0, 3);
        assert!(rel_l2_distance(&bessel_potential(&f, 0.0), &f) < 1e-13);
    }

    #[test]
    fn bessel_scales_plane_wave() {
        let spec = default_grid(1, 256);
        let f = Field::plane_wave(spec, [4, 0, 0]).unwrap();
        let sigma = 1.7;
        let g = bessel_potential(&f, sigma);
        let scale = (1.0 + 16.0f64).powf(sigma / 2.0);
        assert!(rel_l2_distance(&g, &f.scale(Complex64::new(scale, 0.0))) < 1e-12);
    }

    #[test]
    fn bessel_inverse_pair_is_identity() {
        let spec = default_grid(2, 32);
        let f = random_band_limited(spec, 2.0, 5);
        let round = bessel_potential(&bessel_potential(&f, 2.3), -2.3);
        assert!(rel_l2_distance(&round, &f) < 1e-12);
    }

    #[test]
    fn propagators_at_time_zero() {
        let spec = default_grid(1, 128);
        let f = random_band_limited(spec, 2.0, 7);
        assert!(rel_l2_distance(&kg_cosine(&f, 0.0), &f) < 1e-14);
        assert!(lp_norm(&kg_sine(&f, 0.0), 2.0).unwrap() < 1e-14);
    }

    #[test]
    fn plane_wave_solves_linear_equation() {
        let spec = default_grid(1, 256);
        let f = Field::plane_wave(spec, [3, 0, 0]).unwrap();
        let t = 0.7;
        let u = kg_cosine(&f, t);
        let scale = (t * (1.0 + 9.0f64).sqrt()).cos();
        assert!(rel_l2_distance(&u, &f.scale(Complex64::new(scale, 0.0))) < 1e-12);
    }

    #[test]
    fn pythagorean_symbol_identity() {
        // K'(t)^2 f + omega K(t)^2 f = f
        let spec = default_grid(1, 256);
        let f = random_band_limited(spec, 3.0, 11);
        let t = 2.3;
        let a = kg_cosine(&kg_cosine(&f, t), t);
        let kk = kg_sine(&kg_sine(&f, t), t);
        let b = bessel_potential(&kk, 2.0);
        let sum = a.axpy(Complex64::new(1.0, 0.0), &b).unwrap();
        assert!(rel_l2_distance(&sum, &f) < 1e-12);
    }

    #[test]
    fn group_law_and_parity() {
        let spec = default_grid(1, 256);
        let f = random_band_limited(spec, 3.0, 13);
        let (t, s) = (0.9, 1.7);
        // K'(t+s) = K'(t)K'(s) - omega K(t)K(s)
        let lhs = kg_cosine(&f, t + s);
        let rhs = kg_cosine(&kg_cosine(&f, s), t)
            .axpy(
                Complex64::new(-1.0, 0.0),
                &bessel_potential(&kg_sine(&kg_sine(&f, s), t), 2.0),
            )
            .unwrap();
        assert!(rel_l2_distance(&lhs, &rhs) < 1e-11);
        // K(t+s) = K(t)K'(s) + K'(t)K(s)
        let lhs = kg_sine(&f, t + s);
        let rhs = kg_sine(&kg_cosine(&f, s), t)
            .axpy(Complex64::new(1.0, 0.0), &kg_cosine(&kg_sine(&f, s), t))
            .unwrap();
        assert!(rel_l2_distance(&lhs, &rhs) < 1e-11);
        // parity
        assert!(rel_l2_distance(&kg_cosine(&f, -t), &kg_cosine(&f, t)) < 1e-13);
        let neg = kg_sine(&f, -t);
        let pos = kg_sine(&f, t).scale(Complex64::new(-1.0, 0.0));
        assert!(rel_l2_distance(&neg, &pos) < 1e-13);
    }

    #[test]
    fn bessel_isomorphism_ratio_is_band_bounded() {
        // || J_sigma f ||_{M^{s-sigma}} / || f ||_{M^s} within
        // [(1+sqrt(n))^{-|sigma|}, (1+sqrt(n))^{|sigma|}]
        let wf = crate::decomp::build_windows(default_grid(1, 256), 1.0).unwrap();
        let sigma = 1.3f64;
        let bound = (1.0 + 1.0f64).powf(sigma.abs());
        for seed in 0..6u64 {
            let f = random_band_limited(wf.spec, 3.0, 60 + seed);
            let num = modulation_norm(
                &wf,
                &bessel_potential(&f, sigma),
                &SpaceParams::new(0.5 - sigma, 2.0, 2.0).unwrap(),
            )
            .unwrap();
            let den = modulation_norm(&wf, &f, &SpaceParams::new(0.5, 2.0, 2.0).unwrap()).unwrap();
            let ratio = num / den;
            assert!(ratio <= bound * (1.0 + 1e-12) && ratio >= (1.0 / bound) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn riesz_on_plane_wave_and_constant() {
        let spec = default_grid(1, 256);
        let alpha = 0.5;
        let f = Field::plane_wave(spec, [2, 0, 0]).unwrap();
        let g = riesz_potential(&f, alpha).unwrap();
        let scale = riesz_constant(alpha, 1) * (2.0f64).powf(-alpha);
        assert!(rel_l2_distance(&g, &f.scale(Complex64::new(scale, 0.0))) < 1e-12);

        let c = Field::from_fn(spec, |_| Complex64::new(1.5, 0.0)).unwrap();
        let z = riesz_potential(&c, alpha).unwrap();
        assert!(lp_norm(&z, 2.0).unwrap() < 1e-12);
    }

    #[test]
    fn riesz_rejects_out_of_range_alpha() {
        let spec = default_grid(1, 128);
        let f = random_band_limited(spec, 2.0, 1);
        assert!(matches!(
            riesz_potential(&f, 1.5),
            Err(ModkgError::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn riesz_matches_periodized_kernel_quadrature() {
        // 1-D, alpha = 1/2: convolution with the kernel |y|^{-1/2}, whose
        // Fourier symbol is gamma(alpha,1) |xi|^{-1/2}. The brute-force side
        // integrates the analytic Gaussian against exact per-cell kernel
        // integrals on an 8x refined grid with a symmetric truncated image
        // sum; the mean is projected out to match the zero-mode convention.
        let spec = default_grid(1, 1024);
        let alpha = 0.5;
        let sigma = 0.5;
        let u = gaussian(spec, 1.0, sigma);
        let spectral = riesz_potential(&u, alpha).unwrap();

        let refine = 8usize;
        let nf = spec.points * refine;
        let hf = spec.length / nf as f64;
        let lbox = spec.length;
        let images = 400i64;
        // antiderivative of |y|^{-1/2}
        let prim = |y: f64| 2.0 * y.signum() * y.abs().sqrt();
        // cell-averaged periodized kernel on the fine grid, distance d cells
        let kernel: Vec<f64> = (0..nf)
            .map(|d| {
                let z0 = d as f64 * hf;
                let mut s = 0.0;
                for m in -images..=images {
                    let lo = z0 + m as f64 * lbox - 0.5 * hf;
                    let hi = lo + hf;
                    s += prim(hi) - prim(lo);
                }
                s / hf
            })
            .collect();
        let fine_gauss: Vec<f64> = (0..nf)
            .map(|i| {
                let x = -0.5 * lbox + i as f64 * hf;
                (-0.5 * x * x / (sigma * sigma)).exp()
            })
            .collect();
        let mut brute: Vec<f64> = (0..spec.points)
            .map(|i| {
                let fi = i * refine;
                let mut acc = 0.0;
                for (j, g) in fine_gauss.iter().enumerate() {
                    let d = (fi as i64 - j as i64).rem_euclid(nf as i64) as usize;
                    acc += g * kernel[d];
                }
                acc * hf
            })
            .collect();
        let mean: f64 = brute.iter().sum::<f64>() / brute.len() as f64;
        for b in brute.iter_mut() {
            *b -= mean;
        }
        let scale = lp_norm(&spectral, f64::INFINITY).unwrap();
        let mut worst = 0.0f64;
        for (i, b) in brute.iter().enumerate() {
            let diff = (spectral.values()[i].re - b).abs();
            if diff > worst {
                worst = diff;
            }
        }
        assert!(worst <= 1e-4 * scale, "kernel quadrature defect {worst} vs scale {scale}");
    }

    #[test]
    fn power_nonlinearity_pointwise_cases() {
        let spec = default_grid(1, 64);
        let z = Field::zeros(spec);
        let nz = power_nonlinearity(&z, 2.5, 1.0);
        assert!(nz.values().iter().all(|v| v.norm() == 0.0));

        let c = Complex64::new(0.3, -1.1);
        let f = Field::from_fn(spec, |_| c).unwrap();
        let nf = power_nonlinearity(&f, 2.5, -1.0);
        let want = -c.norm().powf(2.5) * c;
        assert!(nf.values().iter().all(|v| (v - want).norm() < 1e-14));
    }

    #[test]
    fn power_nonlinearity_homogeneity() {
        let spec = default_grid(1, 128);
        let f = random_band_limited(spec, 2.0, 21);
        let k = 2.5;
        let lam = 1.7;
        let a = power_nonlinearity(&f.scale(Complex64::new(lam, 0.0)), k, 1.0);
        let b = power_nonlinearity(&f, k, 1.0).scale(Complex64::new(lam * lam.powf(k), 0.0));
        assert!(rel_l2_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn hartree_zero_and_cubic_homogeneity() {
        let spec = default_grid(3, 16);
        let z = Field::zeros(spec);
        let hz = hartree_nonlinearity(&z, 1.5, HartreeSquare::ModulusSquared).unwrap();
        assert!(hz.values().iter().all(|v| v.norm() == 0.0));

        let f = gaussian(spec, 0.8, 2.5);
        let lam = 1.4;
        let a = hartree_nonlinearity(
            &f.scale(Complex64::new(lam, 0.0)),
            1.5,
            HartreeSquare::ModulusSquared,
        )
        .unwrap();
        let b = hartree_nonlinearity(&f, 1.5, HartreeSquare::ModulusSquared)
            .unwrap()
            .scale(Complex64::new(lam.powi(3), 0.0));
        assert!(rel_l2_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn propagator_cache_matches_direct_symbols() {
        let spec = default_grid(1, 128);
        let cache = PropagatorCache::new(spec, 0.125, 16);
        let f = random_band_limited(spec, 2.0, 33);
        let g = forward_transform(&f);
        for m in [0usize, 1, 7, 16] {
            let via_cache = inverse_transform(&cache.apply_cosine(&g, m));
            let direct = kg_cosine(&f, m as f64 * 0.125);
            assert_eq!(via_cache.values(), direct.values(), "cosine table m={m}");
            let via_cache = inverse_transform(&cache.apply_sine(&g, m));
            let direct = kg_sine(&f, m as f64 * 0.125);
            assert_eq!(via_cache.values(), direct.values(), "sine table m={m}");
        }
    }
}
