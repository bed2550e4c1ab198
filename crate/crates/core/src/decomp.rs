//! Frequency-uniform decomposition and dyadic Littlewood-Paley blocks.
//!
//! The base window is a tensor product of 1-D bumps `exp(-a/(1-t^2))`
//! supported on `|t| < 1`, renormalized pointwise by the lattice sum so the
//! discrete partition of unity holds exactly (to rounding) on the grid:
//! the denominator `D(t) = sum_m g(t - m)` is 1-periodic, so dividing each
//! translate by the same `D` makes `sum_m w(t - m) = 1` identically.
//!
//! Tensor half-width 1 keeps the support inside the Euclidean ball of
//! radius `sqrt(n)`, and makes lattice sums separable per axis.

use crate::error::{ModkgError, Result};
use crate::grid::{forward_transform, inverse_transform, Field, GridSpec, SpectralField};
use num_complex::Complex64;
use std::io::Write;

/// Relative spectral-amplitude fraction tolerated outside the retained bands.
pub const LEAKAGE_THRESHOLD: f64 = 1e-10;

#[inline]
fn bump(a: f64, t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-a / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Normalized 1-D window `w(t) = g(t) / sum_m g(t - m)`, support `(-1, 1)`.
fn window_1d(a: f64, t: f64) -> f64 {
    let g = bump(a, t);
    if g == 0.0 {
        return 0.0;
    }
    g / lattice_denominator(a, t)
}

/// `D(t) = sum_{m in Z} g(t - m)`; only integers in `(t-1, t+1)` contribute.
fn lattice_denominator(a: f64, t: f64) -> f64 {
    let m_lo = (t - 1.0).floor() as i64 + 1;
    let m_hi = (t + 1.0).ceil() as i64 - 1;
    let mut d = 0.0;
    for m in m_lo..=m_hi {
        d += bump(a, t - m as f64);
    }
    d
}

#[derive(Debug, Clone)]
struct AxisEntry {
    m_lo: i64,
    vals: [f64; 2],
    count: u8,
}

impl AxisEntry {
    #[inline]
    fn weight(&self, m: i64) -> f64 {
        let off = m - self.m_lo;
        if off >= 0 && off < self.count as i64 {
            self.vals[off as usize]
        } else {
            0.0
        }
    }
}

/// The window family `{phi_k}` sampled on a grid, with the retained band
/// range and the dyadic block machinery built from the same 1-D window.
#[derive(Debug, Clone)]
pub struct WindowFamily {
    pub spec: GridSpec,
    pub smoothness: f64,
    kmax: i64,
    jmax: u32,
    leakage_threshold: f64,
    axis: Vec<AxisEntry>,
    bands: Vec<[i64; 3]>,
}

/// Band-limited pieces of a field, stored as compact spectral patches.
#[derive(Debug, Clone)]
pub struct ModulationDecomposition {
    pub spec: GridSpec,
    pub kmax: i64,
    bands: Vec<([i64; 3], SpectralPatch)>,
}

/// Rectangular block of spectral coefficients (row-major over `shape`).
#[derive(Debug, Clone)]
pub struct SpectralPatch {
    pub t_lo: [usize; 3],
    pub shape: [usize; 3],
    pub coeffs: Vec<Complex64>,
}

/// Construct the window family. `smoothness` is the bump steepness `a` in
/// `exp(-a/(1-t^2))`; larger values sharpen the transition.
pub fn build_windows(spec: GridSpec, smoothness: f64) -> Result<WindowFamily> {
    if spec.freq_step() > 0.125 + 1e-15 {
        return Err(ModkgError::UnresolvedWindow { dxi: spec.freq_step() });
    }
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(ModkgError::Parse(format!("smoothness {smoothness} must be positive")));
    }
    let sqrt_n = (spec.dim as f64).sqrt();
    // largest |k|_inf with sqrt(n) + |k|_inf strictly inside Nyquist
    let kmax = ((spec.nyquist() - sqrt_n).ceil() as i64) - 1;
    if kmax < 1 {
        return Err(ModkgError::InvalidGrid(format!(
            "grid retains no frequency band: nyquist {} vs sqrt(n) {}",
            spec.nyquist(),
            sqrt_n
        )));
    }

    let n = spec.points;
    let dxi = spec.freq_step();
    let half = (n / 2) as i64;
    let mut axis = Vec::with_capacity(n);
    for t in 0..n {
        let xi = (t as i64 - half) as f64 * dxi;
        let m_lo = (xi - 1.0).floor() as i64 + 1;
        let m_hi = (xi + 1.0).ceil() as i64 - 1;
        let mut vals = [0.0f64; 2];
        let mut d = 0.0;
        let count = (m_hi - m_lo + 1).clamp(0, 2) as u8;
        for (slot, m) in (m_lo..=m_hi).enumerate().take(2) {
            vals[slot] = bump(smoothness, xi - m as f64);
            d += vals[slot];
        }
        for v in vals.iter_mut() {
            *v /= d;
        }
        axis.push(AxisEntry { m_lo, vals, count });
    }

    let max_u = (sqrt_n * spec.nyquist()).log2();
    let jmax = (max_u.floor() as u32) + 1;

    let mut bands = Vec::new();
    let mut k = [-kmax; 3];
    for axis_id in spec.dim..3 {
        k[axis_id] = 0;
    }
    loop {
        bands.push(k);
        let mut axis_id = spec.dim;
        loop {
            if axis_id == 0 {
                return Ok(WindowFamily {
                    spec,
                    smoothness,
                    kmax,
                    jmax,
                    leakage_threshold: LEAKAGE_THRESHOLD,
                    axis,
                    bands,
                });
            }
            axis_id -= 1;
            if k[axis_id] < kmax {
                k[axis_id] += 1;
                for a in axis_id + 1..spec.dim {
                    k[a] = -kmax;
                }
                break;
            }
        }
    }
}

impl WindowFamily {
    pub fn kmax(&self) -> i64 {
        self.kmax
    }

    /// Replace the band-resolution tolerance (internal solver diagnostics
    /// measure the retained part of fields with genuine small tails).
    pub fn with_leakage_threshold(mut self, threshold: f64) -> Self {
        self.leakage_threshold = threshold;
        self
    }

    pub fn jmax(&self) -> u32 {
        self.jmax
    }

    /// Retained band indices in lexicographic order.
    pub fn bands(&self) -> &[[i64; 3]] {
        &self.bands
    }

    /// Continuous base window `phi(xi)`; exactly zero for `|xi| > sqrt(n)`.
    pub fn phi(&self, xi: &[f64; 3]) -> f64 {
        let mut w = 1.0;
        for a in 0..self.spec.dim {
            w *= window_1d(self.smoothness, xi[a]);
            if w == 0.0 {
                return 0.0;
            }
        }
        w
    }

    /// Continuous translated window `phi_k(xi) = phi(xi - k)`.
    pub fn phi_k(&self, xi: &[f64; 3], k: &[i64; 3]) -> f64 {
        let mut shifted = [0.0; 3];
        for a in 0..self.spec.dim {
            shifted[a] = xi[a] - k[a] as f64;
        }
        self.phi(&shifted)
    }

    /// Grid-sampled window value at spectral slot `tidx` for band `k`.
    #[inline]
    pub fn band_weight(&self, tidx: &[usize; 3], k: &[i64; 3]) -> f64 {
        let mut w = 1.0;
        for a in 0..self.spec.dim {
            w *= self.axis[tidx[a]].weight(k[a]);
            if w == 0.0 {
                return 0.0;
            }
        }
        w
    }

    /// `sum_{|k|_inf <= kmax} phi_k` at a spectral slot.
    pub fn partition_sum(&self, tidx: &[usize; 3]) -> f64 {
        let mut total = 1.0;
        for a in 0..self.spec.dim {
            let e = &self.axis[tidx[a]];
            let mut s = 0.0;
            for off in 0..e.count as i64 {
                let m = e.m_lo + off;
                if m.abs() <= self.kmax {
                    s += e.vals[off as usize];
                }
            }
            total *= s;
        }
        total
    }

    fn check_band(&self, k: &[i64; 3]) -> Result<()> {
        for a in 0..self.spec.dim {
            if k[a].abs() > self.kmax {
                return Err(ModkgError::BandOutOfRange { index: *k, kmax: self.kmax });
            }
        }
        for a in self.spec.dim..3 {
            if k[a] != 0 {
                return Err(ModkgError::BandOutOfRange { index: *k, kmax: self.kmax });
            }
        }
        Ok(())
    }

    /// Spectral slot range (inclusive lo, exclusive hi) supporting band `k_a`.
    fn slot_range(&self, k_a: i64) -> (usize, usize) {
        let n = self.spec.points;
        let half = n as f64 / 2.0;
        let r = self.spec.samples_per_unit_freq();
        let lo = (half + (k_a - 1) as f64 * r).floor() as i64; // pad one slot
        let hi = (half + (k_a + 1) as f64 * r).ceil() as i64 + 1;
        (lo.max(0) as usize, (hi.max(0) as usize).min(n))
    }

    /// Extract the windowed patch `phi_k * g` without materializing a field.
    pub fn extract_band_patch(&self, g: &SpectralField, k: &[i64; 3]) -> Result<SpectralPatch> {
        self.check_band(k)?;
        let spec = self.spec;
        let mut t_lo = [0usize; 3];
        let mut shape = [1usize; 3];
        for a in 0..spec.dim {
            let (lo, hi) = self.slot_range(k[a]);
            t_lo[a] = lo;
            shape[a] = hi.saturating_sub(lo).max(1);
        }
        let len: usize = shape[..spec.dim].iter().product();
        let mut coeffs = vec![Complex64::default(); len];
        let mut tidx = t_lo;
        for (pos, c) in coeffs.iter_mut().enumerate() {
            // decode patch-local position into grid slot indices
            let mut rem = pos;
            for a in (0..spec.dim).rev() {
                tidx[a] = t_lo[a] + rem % shape[a];
                rem /= shape[a];
            }
            let w = self.band_weight(&tidx, k);
            if w != 0.0 {
                *c = g.coeffs()[spec.flat_index(tidx)] * w;
            }
        }
        Ok(SpectralPatch { t_lo, shape, coeffs })
    }

    /// `box_k` with the output kept spectral; zeros outside the band support
    /// are exact.
    pub fn box_operator_spectral(&self, g: &SpectralField, k: &[i64; 3]) -> Result<SpectralField> {
        let patch = self.extract_band_patch(g, k)?;
        let mut out = SpectralField::zeros(self.spec);
        patch.add_into(&self.spec, out.coeffs_mut());
        Ok(out)
    }

    /// Frequency-uniform decomposition operator `box_k = F^-1 phi_k F`.
    pub fn box_operator(&self, f: &Field, k: &[i64; 3]) -> Result<Field> {
        let g = forward_transform(f);
        Ok(inverse_transform(&self.box_operator_spectral(&g, k)?))
    }

    /// Relative spectral amplitude outside `|xi|_inf <= kmax`.
    pub fn leakage_fraction(&self, g: &SpectralField) -> f64 {
        let kmax = self.kmax as f64 + 1e-9;
        let dim = self.spec.dim;
        let (total, outside) = g.mass_split(|j| {
            (0..dim).any(|a| (j[a] as f64 * self.spec.freq_step()).abs() > kmax)
        });
        if total == 0.0 {
            0.0
        } else {
            (outside / total).max(0.0).sqrt()
        }
    }

    /// Error unless the field is band-resolved by the retained range.
    pub fn ensure_band_resolved(&self, g: &SpectralField) -> Result<()> {
        let fraction = self.leakage_fraction(g);
        if fraction > self.leakage_threshold {
            return Err(ModkgError::SpectralLeakage {
                fraction,
                threshold: self.leakage_threshold,
            });
        }
        Ok(())
    }

    /// Split a band-resolved field into its retained band patches.
    pub fn decompose(&self, f: &Field) -> Result<ModulationDecomposition> {
        let g = forward_transform(f);
        self.decompose_spectral(&g)
    }

    pub fn decompose_spectral(&self, g: &SpectralField) -> Result<ModulationDecomposition> {
        self.ensure_band_resolved(g)?;
        let bands = self
            .bands
            .iter()
            .map(|k| Ok((*k, self.extract_band_patch(g, k)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModulationDecomposition { spec: self.spec, kmax: self.kmax, bands })
    }

    /// Smooth dyadic block weight at frequency `xi`; block 0 covers `|xi| <= 1`
    /// and block `j >= 1` the annulus `2^{j-1} < |xi| < 2^{j+1}`.
    pub fn dyadic_weight(&self, j: u32, xi: &[f64; 3]) -> f64 {
        let r: f64 = (0..self.spec.dim).map(|a| xi[a] * xi[a]).sum::<f64>().sqrt();
        if r == 0.0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let u = r.log2();
        if j == 0 {
            // complement of the j >= 1 blocks keeps the partition exact
            let mut s = 0.0;
            let m_lo = ((u - 1.0).floor() as i64 + 1).max(1);
            let m_hi = (u + 1.0).ceil() as i64 - 1;
            for m in m_lo..=m_hi {
                s += window_1d(self.smoothness, u - m as f64);
            }
            1.0 - s
        } else {
            window_1d(self.smoothness, u - j as f64)
        }
    }

    /// Littlewood-Paley block `Delta_j` as a spectral multiplier.
    pub fn dyadic_operator_spectral(&self, g: &SpectralField, j: u32) -> Result<SpectralField> {
        if j > self.jmax {
            return Err(ModkgError::BandOutOfRange {
                index: [j as i64, 0, 0],
                kmax: self.jmax as i64,
            });
        }
        let spec = self.spec;
        let coeffs = g
            .coeffs()
            .iter()
            .enumerate()
            .map(|(flat, c)| {
                let xi = spec.frequency(spec.multi_index(flat));
                c * self.dyadic_weight(j, &xi)
            })
            .collect();
        SpectralField::new(spec, coeffs)
    }

    pub fn dyadic_operator(&self, f: &Field, j: u32) -> Result<Field> {
        let g = forward_transform(f);
        Ok(inverse_transform(&self.dyadic_operator_spectral(&g, j)?))
    }

    /// 1-D window table export: k-index, frequency, phi value.
    pub fn write_window_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"k,xi,phi\n")?;
        let half = (self.spec.points / 2) as i64;
        let dxi = self.spec.freq_step();
        for (t, e) in self.axis.iter().enumerate() {
            let xi = (t as i64 - half) as f64 * dxi;
            for off in 0..e.count as i64 {
                let m = e.m_lo + off;
                if m.abs() <= self.kmax {
                    w.write_all(format!("{},{},{}\n", m, xi, e.vals[off as usize]).as_bytes())?;
                }
            }
        }
        Ok(())
    }
}

impl SpectralPatch {
    /// Add the patch into a full-size coefficient array.
    pub fn add_into(&self, spec: &GridSpec, coeffs: &mut [Complex64]) {
        let dim = spec.dim;
        let mut tidx = [0usize; 3];
        for (pos, c) in self.coeffs.iter().enumerate() {
            let mut rem = pos;
            for a in (0..dim).rev() {
                tidx[a] = self.t_lo[a] + rem % self.shape[a];
                rem /= self.shape[a];
            }
            coeffs[spec.flat_index(tidx)] += c;
        }
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        let mut acc = crate::sum::Compensated::new();
        for c in &self.coeffs {
            acc.add(c.norm_sqr());
        }
        acc.total()
    }
}

impl ModulationDecomposition {
    pub fn band_indices(&self) -> impl Iterator<Item = &[i64; 3]> {
        self.bands.iter().map(|(k, _)| k)
    }

    pub fn patches(&self) -> &[([i64; 3], SpectralPatch)] {
        &self.bands
    }

    /// Materialize one band as a physical field.
    pub fn band_field(&self, k: &[i64; 3]) -> Option<Field> {
        self.bands.iter().find(|(kk, _)| kk == k).map(|(_, patch)| {
            let mut g = SpectralField::zeros(self.spec);
            patch.add_into(&self.spec, g.coeffs_mut());
            inverse_transform(&g)
        })
    }

    /// Sum all bands back into a field (deterministic band order).
    pub fn reconstruct(&self) -> Field {
        let mut g = SpectralField::zeros(self.spec);
        for (_, patch) in &self.bands {
            patch.add_into(&self.spec, g.coeffs_mut());
        }
        inverse_transform(&g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm;
    use crate::testutil::{default_grid, random_band_limited, rel_l2_distance};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn family(dim: usize, points: usize) -> WindowFamily {
        build_windows(default_grid(dim, points), 1.0).unwrap()
    }

    #[test]
    fn window_support_is_exact() {
        for dim in 1..=3usize {
            let wf = family(dim, if dim == 3 { 64 } else { 256 });
            let sqrt_n = (dim as f64).sqrt();
            // |xi| = sqrt(n) + 0.1 along a generic direction
            let scale = (sqrt_n + 0.1) / sqrt_n;
            let mut xi = [0.0; 3];
            for a in 0..dim {
                xi[a] = scale;
            }
            assert_eq!(wf.phi(&xi), 0.0);
            assert!(wf.phi(&[0.0; 3]) > 0.0);
        }
    }

    #[test]
    fn discrete_partition_of_unity_at_random_slots() {
        let wf = family(1, 1024);
        let n = wf.spec.points;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let kmax = wf.kmax() as f64;
        let mut checked = 0usize;
        while checked < 10_000 {
            let t = rng.gen_range(0..n);
            let xi = wf.spec.frequency([t, 0, 0]);
            if xi[0].abs() <= kmax {
                let s = wf.partition_sum(&[t, 0, 0]);
                assert!((s - 1.0).abs() <= 1e-12, "partition defect {} at xi {}", s - 1.0, xi[0]);
                checked += 1;
            }
        }
    }

    #[test]
    fn one_dim_neighbor_sum_is_one() {
        let wf = family(1, 256);
        // sum over k in {-2..2} of phi(-k) at xi = 0 plus neighbors
        let mut s = 0.0;
        for k in -2i64..=2 {
            s += wf.phi(&[-k as f64, 0.0, 0.0]);
        }
        assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn box_on_plane_wave_scales_by_phi() {
        let wf = family(1, 256);
        let k0 = [3i64, 0, 0];
        let f = Field::plane_wave(wf.spec, k0).unwrap();
        // window value at exact lattice offset 0 is 1, neighbors 0
        let same = wf.box_operator(&f, &k0).unwrap();
        assert!(rel_l2_distance(&same, &f) < 1e-12);
        let neighbor = wf.box_operator(&f, &[4, 0, 0]).unwrap();
        assert!(lp_norm(&neighbor, 2.0).unwrap() < 1e-12);
    }

    #[test]
    fn box_support_zeros_are_exact() {
        let wf = family(1, 256);
        let f = random_band_limited(wf.spec, 3.0, 17);
        let g = forward_transform(&f);
        let band = wf.box_operator_spectral(&g, &[2, 0, 0]).unwrap();
        for (flat, c) in band.coeffs().iter().enumerate() {
            let xi = wf.spec.frequency(wf.spec.multi_index(flat));
            if (xi[0] - 2.0).abs() >= 1.0 {
                assert_eq!(c.norm(), 0.0);
            }
        }
    }

    #[test]
    fn band_out_of_range_is_rejected() {
        let wf = family(1, 256);
        let f = random_band_limited(wf.spec, 2.0, 1);
        let err = wf.box_operator(&f, &[wf.kmax() + 1, 0, 0]);
        assert!(matches!(err, Err(ModkgError::BandOutOfRange { .. })));
    }

    #[test]
    fn decompose_reconstruct_roundtrip() {
        for (dim, points) in [(1usize, 256usize), (2, 64), (3, 64)] {
            let wf = family(dim, points);
            let f = random_band_limited(wf.spec, (wf.kmax() - 1).max(1) as f64, 7 + dim as u64);
            let d = wf.decompose(&f).unwrap();
            let back = d.reconstruct();
            assert!(
                rel_l2_distance(&back, &f) <= 1e-10,
                "dim {dim}: reconstruction defect {}",
                rel_l2_distance(&back, &f)
            );
        }
    }

    #[test]
    fn gaussian_is_band_resolved_and_roundtrips() {
        let wf = family(1, 1024);
        let f = crate::testutil::gaussian(wf.spec, 1.0, 1.0);
        let d = wf.decompose(&f).unwrap();
        assert!(rel_l2_distance(&d.reconstruct(), &f) <= 1e-10);
    }

    #[test]
    fn leaky_field_is_rejected() {
        let wf = family(1, 256);
        // plane wave beyond kmax: all mass outside
        let k = [wf.kmax() + 1, 0, 0];
        let f = Field::plane_wave(wf.spec, k).unwrap();
        assert!(matches!(wf.decompose(&f), Err(ModkgError::SpectralLeakage { .. })));
    }

    #[test]
    fn zero_field_decomposes_to_zero() {
        let wf = family(2, 64);
        let d = wf.decompose(&Field::zeros(wf.spec)).unwrap();
        let back = d.reconstruct();
        assert!(back.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn reconstruction_from_box_sum_matches_direct_spectral_sum() {
        let wf = family(1, 512);
        let f = random_band_limited(wf.spec, 3.0, 23);
        let mut acc = Field::zeros(wf.spec);
        for k in wf.bands().to_vec() {
            let piece = wf.box_operator(&f, &k).unwrap();
            acc = acc.axpy(Complex64::new(1.0, 0.0), &piece).unwrap();
        }
        assert!(rel_l2_distance(&acc, &f) <= 1e-10);
    }

    #[test]
    fn dyadic_blocks_partition_unity() {
        let wf = family(2, 64);
        let spec = wf.spec;
        for flat in (0..spec.len()).step_by(7) {
            let xi = spec.frequency(spec.multi_index(flat));
            let mut s = 0.0;
            for j in 0..=wf.jmax() {
                s += wf.dyadic_weight(j, &xi);
            }
            assert!((s - 1.0).abs() <= 1e-12, "dyadic partition defect {} at {:?}", s - 1.0, xi);
        }
    }

    #[test]
    fn dyadic_plane_wave_hits_neighboring_blocks_only() {
        let wf = family(1, 1024);
        let j0 = 3u32; // |xi| = 8
        let f = Field::plane_wave(wf.spec, [8, 0, 0]).unwrap();
        for j in 0..=wf.jmax() {
            let piece = wf.dyadic_operator(&f, j).unwrap();
            let mass = lp_norm(&piece, 2.0).unwrap();
            if (i64::from(j) - i64::from(j0)).abs() > 1 {
                assert!(mass < 1e-12, "block {j} has mass {mass}");
            }
        }
    }

    #[test]
    fn dyadic_sum_reconstructs() {
        let wf = family(1, 512);
        let f = random_band_limited(wf.spec, 6.0, 31);
        let mut acc = Field::zeros(wf.spec);
        for j in 0..=wf.jmax() {
            acc = acc
                .axpy(Complex64::new(1.0, 0.0), &wf.dyadic_operator(&f, j).unwrap())
                .unwrap();
        }
        assert!(rel_l2_distance(&acc, &f) <= 1e-10);
    }

    #[test]
    fn translation_covariance_on_lattice() {
        let wf = family(1, 512);
        let f = random_band_limited(wf.spec, 2.0, 4);
        let m = [2i64, 0, 0];
        let k = [3i64, 0, 0];
        let lhs = wf.box_operator(&f.modulate(m).unwrap(), &k).unwrap();
        let rhs = wf
            .box_operator(&f, &[k[0] - m[0], 0, 0])
            .unwrap()
            .modulate(m)
            .unwrap();
        assert!(rel_l2_distance(&lhs, &rhs) <= 1e-12);
    }
}
