//! Periodic grid, discrete Fourier transform and Lebesgue norms.
//!
//! Functions live on the torus `[-L/2, L/2)^n` sampled at `N` points per
//! axis. The transform is unitary in the sense that the `L^2` quadrature
//! norm of a [`Field`] equals the plain `l^2` norm of its [`SpectralField`]
//! coefficients, which removes constant bookkeeping from every norm
//! computation downstream.
//!
//! Frequency storage is lexicographic in the shifted index `t = j + N/2`
//! with `j` in `[-N/2, N/2)`; index/frequency maps are explicit and no
//! fftshift convention crosses a module boundary.

use crate::error::{ModkgError, Result};
use crate::fft::dft_nd;
use crate::sum::Compensated;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::{Read, Write};

pub const MKGF_MAGIC: &[u8; 4] = b"MKGF";
pub const MKGF_VERSION: u32 = 1;

/// Discretization of the periodic box `[-L/2, L/2)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Spatial dimension (1, 2 or 3).
    pub dim: usize,
    /// Box edge length.
    pub length: f64,
    /// Samples per axis (power of two, >= 16).
    pub points: usize,
}

impl GridSpec {
    /// Build a grid, enforcing the resolution invariants: `N >= 16` a power
    /// of two, `n <= 3`, and frequency spacing `2*pi/L <= 1/8` so every unit
    /// frequency box is sampled at least 8 times per axis.
    pub fn new(dim: usize, length: f64, points: usize) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(ModkgError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(ModkgError::InvalidGrid(format!(
                "points per axis {points} must be a power of two >= 16"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(ModkgError::InvalidGrid(format!("box length {length} must be positive")));
        }
        let spec = Self { dim, length, points };
        if spec.freq_step() > 0.125 + 1e-15 {
            return Err(ModkgError::UnresolvedWindow { dxi: spec.freq_step() });
        }
        Ok(spec)
    }

    /// Total sample count `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = L/N`.
    pub fn step(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Frequency spacing `dxi = 2*pi/L`.
    pub fn freq_step(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Nyquist frequency `pi*N/L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points as f64 / self.length
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.step().powi(self.dim as i32)
    }

    /// Coefficient scale making Plancherel exact: `L^{n/2} / N^n`.
    pub fn unitary_scale(&self) -> f64 {
        self.length.powf(self.dim as f64 / 2.0) / self.len() as f64
    }

    /// Decompose a flat row-major index into per-axis indices (unused axes 0).
    #[inline]
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    #[inline]
    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let mut flat = 0usize;
        for axis in 0..self.dim {
            flat = flat * self.points + idx[axis];
        }
        flat
    }

    /// Physical coordinate of the sample with per-axis index `i`.
    #[inline]
    pub fn coord(&self, idx: [usize; 3]) -> [f64; 3] {
        let h = self.step();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = -0.5 * self.length + idx[axis] as f64 * h;
        }
        x
    }

    /// Integer frequency index `j` in `[-N/2, N/2)` of a spectral slot.
    #[inline]
    pub fn freq_index(&self, idx: [usize; 3]) -> [i64; 3] {
        let half = (self.points / 2) as i64;
        let mut j = [0i64; 3];
        for axis in 0..self.dim {
            j[axis] = idx[axis] as i64 - half;
        }
        j
    }

    /// Frequency `xi_j = j * dxi` of a spectral slot.
    #[inline]
    pub fn frequency(&self, idx: [usize; 3]) -> [f64; 3] {
        let dxi = self.freq_step();
        let j = self.freq_index(idx);
        let mut xi = [0.0; 3];
        for axis in 0..self.dim {
            xi[axis] = j[axis] as f64 * dxi;
        }
        xi
    }

    /// Lattice points per unit frequency, `L / 2 pi`.
    pub fn samples_per_unit_freq(&self) -> f64 {
        1.0 / self.freq_step()
    }

    /// Spectral slot of integer lattice frequency `k`, when the lattice is
    /// exactly representable on this grid (`L / 2 pi` integral).
    pub fn slot_of_lattice(&self, k: [i64; 3]) -> Result<[usize; 3]> {
        let r = self.samples_per_unit_freq();
        if (r - r.round()).abs() > 1e-9 {
            return Err(ModkgError::InvalidGrid(format!(
                "integer frequencies not on this grid: L/(2 pi) = {r}"
            )));
        }
        let r = r.round() as i64;
        let half = (self.points / 2) as i64;
        let mut idx = [0usize; 3];
        for axis in 0..self.dim {
            let t = k[axis] * r + half;
            if t < 0 || t >= self.points as i64 {
                return Err(ModkgError::BandOutOfRange { index: k, kmax: half / r });
            }
            idx[axis] = t as usize;
        }
        Ok(idx)
    }
}

/// Complex samples on the physical grid, row-major lexicographic.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub spec: GridSpec,
    values: Vec<Complex64>,
}

/// Fourier coefficients indexed by shifted lexicographic frequency slots.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub spec: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Field {
    /// Wrap samples, rejecting non-finite values.
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(ModkgError::GridMismatch(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(ModkgError::NonFiniteField);
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![Complex64::default(); spec.len()] }
    }

    /// Sample a function of the physical coordinate.
    pub fn from_fn<F: FnMut(&[f64; 3]) -> Complex64>(spec: GridSpec, mut f: F) -> Result<Self> {
        let values = (0..spec.len())
            .map(|flat| f(&spec.coord(spec.multi_index(flat))))
            .collect();
        Self::new(spec, values)
    }

    /// Unit-amplitude plane wave at the integer lattice frequency `k`.
    pub fn plane_wave(spec: GridSpec, k: [i64; 3]) -> Result<Self> {
        spec.slot_of_lattice(k)?;
        Self::from_fn(spec, |x| {
            let phase: f64 = (0..spec.dim).map(|a| k[a] as f64 * x[a]).sum();
            Complex64::new(phase.cos(), phase.sin())
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Pointwise linear combination `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &Field) -> Result<Field> {
        if self.spec != other.spec {
            return Err(ModkgError::GridMismatch("axpy on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Field::new(self.spec, values)
    }

    pub fn scale(&self, c: Complex64) -> Field {
        Field {
            spec: self.spec,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Multiply by the lattice character `exp(i m . x)`, shifting the
    /// spectrum by the integer vector `m`. Requires `L/(2 pi)` integral so
    /// the shift lands exactly on the frequency grid.
    pub fn modulate(&self, m: [i64; 3]) -> Result<Field> {
        self.spec.slot_of_lattice([0; 3])?;
        Field::from_fn(self.spec, |x| {
            let phase: f64 = (0..self.spec.dim).map(|a| m[a] as f64 * x[a]).sum();
            Complex64::new(phase.cos(), phase.sin())
        })
        .map(|ch| Field {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(ch.values.iter())
                .map(|(v, c)| v * c)
                .collect(),
        })
    }
}

impl SpectralField {
    pub fn new(spec: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.len() {
            return Err(ModkgError::GridMismatch(format!(
                "expected {} coefficients, got {}",
                spec.len(),
                coeffs.len()
            )));
        }
        Ok(Self { spec, coeffs })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, coeffs: vec![Complex64::default(); spec.len()] }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Plain `l^2` norm of the coefficients (equals `lp_norm(f, 2)`).
    pub fn l2_norm(&self) -> f64 {
        let mut acc = Compensated::new();
        for c in &self.coeffs {
            acc.add(c.norm_sqr());
        }
        acc.total().max(0.0).sqrt()
    }

    /// Total spectral mass `sum |c|^2` and the mass at slots selected by `outside`.
    pub fn mass_split<F: FnMut([i64; 3]) -> bool>(&self, mut outside: F) -> (f64, f64) {
        let mut total = Compensated::new();
        let mut out = Compensated::new();
        for (flat, c) in self.coeffs.iter().enumerate() {
            let m = c.norm_sqr();
            total.add(m);
            if outside(self.spec.freq_index(self.spec.multi_index(flat))) {
                out.add(m);
            }
        }
        (total.total(), out.total())
    }
}

/// Forward unitary transform.
pub fn forward_transform(f: &Field) -> SpectralField {
    let spec = f.spec;
    let n = spec.points;
    let half = n / 2;
    let mut buf = f.values.clone();
    dft_nd(&mut buf, spec.dim, n, true);
    let kappa = spec.unitary_scale();
    let mut coeffs = vec![Complex64::default(); spec.len()];
    for (flat, slot) in coeffs.iter_mut().enumerate() {
        let t = spec.multi_index(flat);
        let mut raw = [0usize; 3];
        let mut parity = 0i64;
        for axis in 0..spec.dim {
            let j = t[axis] as i64 - half as i64;
            parity += j;
            raw[axis] = ((t[axis] + half) % n) as usize;
        }
        let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *slot = buf[spec.flat_index(raw)] * (kappa * sign);
    }
    SpectralField { spec, coeffs }
}

/// Inverse unitary transform.
pub fn inverse_transform(g: &SpectralField) -> Field {
    let spec = g.spec;
    let n = spec.points;
    let half = n / 2;
    let scale = 1.0 / (spec.unitary_scale() * spec.len() as f64);
    let mut buf = vec![Complex64::default(); spec.len()];
    for (flat, c) in g.coeffs.iter().enumerate() {
        let t = spec.multi_index(flat);
        let mut raw = [0usize; 3];
        let mut parity = 0i64;
        for axis in 0..spec.dim {
            let j = t[axis] as i64 - half as i64;
            parity += j;
            raw[axis] = ((t[axis] + half) % n) as usize;
        }
        let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[spec.flat_index(raw)] = c * (scale * sign);
    }
    dft_nd(&mut buf, spec.dim, n, false);
    Field { spec, values: buf }
}

/// Physical values of a field given a sparse set of spectral entries in
/// shifted multi-index layout; the input permutation touches only the
/// entries and the raw-layout inverse FFT output needs no reordering.
pub(crate) fn inverse_values_from_sparse(
    spec: &GridSpec,
    entries: impl Iterator<Item = ([usize; 3], Complex64)>,
    buf: &mut Vec<Complex64>,
) {
    let n = spec.points;
    let half = n / 2;
    let scale = 1.0 / (spec.unitary_scale() * spec.len() as f64);
    buf.clear();
    buf.resize(spec.len(), Complex64::default());
    for (t, c) in entries {
        let mut raw = [0usize; 3];
        let mut parity = 0i64;
        for axis in 0..spec.dim {
            let j = t[axis] as i64 - half as i64;
            parity += j;
            raw[axis] = (t[axis] + half) % n;
        }
        let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[spec.flat_index(raw)] = c * (scale * sign);
    }
    dft_nd(buf, spec.dim, n, false);
}

/// Pointwise multiply coefficients by a frequency symbol.
pub fn apply_multiplier<F>(g: &SpectralField, mut symbol: F) -> Result<SpectralField>
where
    F: FnMut(&[f64; 3]) -> Complex64,
{
    let spec = g.spec;
    let mut coeffs = Vec::with_capacity(g.coeffs.len());
    for (flat, c) in g.coeffs.iter().enumerate() {
        let xi = spec.frequency(spec.multi_index(flat));
        let m = symbol(&xi);
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(ModkgError::NonFiniteSymbol { xi });
        }
        coeffs.push(c * m);
    }
    Ok(SpectralField { spec, coeffs })
}

/// Pointwise multiply coefficients by a precomputed real symbol table.
pub fn apply_real_table(g: &SpectralField, table: &[f64]) -> Result<SpectralField> {
    if table.len() != g.coeffs.len() {
        return Err(ModkgError::GridMismatch("symbol table length".into()));
    }
    let coeffs = g
        .coeffs
        .iter()
        .zip(table)
        .map(|(c, m)| c * m)
        .collect();
    Ok(SpectralField { spec: g.spec, coeffs })
}

/// `(sum |f(x)|^p h^n)^{1/p}` Riemann quadrature; `p = inf` is the max modulus.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    lp_norm_values(f.values(), &f.spec, p)
}

pub(crate) fn lp_norm_values(values: &[Complex64], spec: &GridSpec, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(ModkgError::InvalidExponent { p });
    }
    if p.is_infinite() {
        let mut best = 0.0f64;
        for v in values {
            let m = v.norm();
            if m > best {
                best = m;
            }
        }
        return Ok(best);
    }
    let mut acc = Compensated::new();
    if (p - 2.0).abs() < 1e-15 {
        for v in values {
            acc.add(v.norm_sqr());
        }
        return Ok((acc.total().max(0.0) * spec.cell_volume()).sqrt());
    }
    if (p - 1.0).abs() < 1e-15 {
        for v in values {
            acc.add(v.norm());
        }
        return Ok(acc.total() * spec.cell_volume());
    }
    // |v|^p from |v|^2 without powf for the common exponents
    if (p - 4.0).abs() < 1e-15 {
        for v in values {
            let m2 = v.norm_sqr();
            acc.add(m2 * m2);
        }
    } else if (p - 3.0).abs() < 1e-15 {
        for v in values {
            let m2 = v.norm_sqr();
            acc.add(m2 * m2.sqrt());
        }
    } else if (p - 4.0 / 3.0).abs() < 1e-15 {
        for v in values {
            let m2 = v.norm_sqr();
            acc.add((m2 * m2).cbrt());
        }
    } else if (p - 8.0).abs() < 1e-15 {
        for v in values {
            let m2 = v.norm_sqr();
            acc.add(m2 * m2 * m2 * m2);
        }
    } else if p.fract() == 0.0 && p <= 32.0 {
        let half = p as i32 / 2;
        let odd = (p as i32) % 2 == 1;
        for v in values {
            let m2 = v.norm_sqr();
            let base = m2.powi(half);
            acc.add(if odd { base * m2.sqrt() } else { base });
        }
    } else {
        for v in values {
            acc.add(v.norm().powf(p));
        }
    }
    Ok((acc.total().max(0.0) * spec.cell_volume()).powf(1.0 / p))
}

/// Conjugate exponent `p' = p/(p-1)` with the usual conventions at 1, inf.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if (p - 1.0).abs() < 1e-15 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

// ---------------------------------------------------------------------------
// Serialization: flat binary `.mkgf` and CSV export.
// ---------------------------------------------------------------------------

/// Write a field in the MKGF format: magic, version u32, n u32, N u32,
/// L f64, then `N^n` little-endian (re, im) f64 pairs.
pub fn write_mkgf<W: Write>(f: &Field, w: &mut W) -> Result<()> {
    w.write_all(MKGF_MAGIC)?;
    w.write_all(&MKGF_VERSION.to_le_bytes())?;
    w.write_all(&(f.spec.dim as u32).to_le_bytes())?;
    w.write_all(&(f.spec.points as u32).to_le_bytes())?;
    w.write_all(&f.spec.length.to_le_bytes())?;
    for v in f.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_mkgf<R: Read>(r: &mut R) -> Result<Field> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MKGF_MAGIC {
        return Err(ModkgError::Parse("bad MKGF magic".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != MKGF_VERSION {
        return Err(ModkgError::Parse(format!("unsupported MKGF version {version}")));
    }
    r.read_exact(&mut u32buf)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let points = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)?;
    let length = f64::from_le_bytes(f64buf);
    let spec = GridSpec::new(dim, length, points)?;
    let mut values = Vec::with_capacity(spec.len());
    for _ in 0..spec.len() {
        r.read_exact(&mut f64buf)?;
        let re = f64::from_le_bytes(f64buf);
        r.read_exact(&mut f64buf)?;
        let im = f64::from_le_bytes(f64buf);
        values.push(Complex64::new(re, im));
    }
    Field::new(spec, values)
}

/// CSV export: per-axis sample indices, then re, im.
pub fn write_field_csv<W: Write>(f: &Field, w: &mut W) -> Result<()> {
    let dim = f.spec.dim;
    let mut header = String::new();
    for axis in 0..dim {
        header.push_str(&format!("i{axis},"));
    }
    header.push_str("re,im\n");
    w.write_all(header.as_bytes())?;
    for (flat, v) in f.values().iter().enumerate() {
        let idx = f.spec.multi_index(flat);
        let mut line = String::new();
        for axis in 0..dim {
            line.push_str(&format!("{},", idx[axis]));
        }
        line.push_str(&format!("{},{}\n", v.re, v.im));
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{default_grid, random_field};

    #[test]
    fn constant_field_transforms_to_zero_mode() {
        let spec = default_grid(1, 256);
        let f = Field::from_fn(spec, |_| Complex64::new(1.0, 0.0)).unwrap();
        let g = forward_transform(&f);
        let center = spec.flat_index([spec.points / 2, 0, 0]);
        for (flat, c) in g.coeffs().iter().enumerate() {
            if flat == center {
                // mass L^{n/2} at j = 0
                assert!((c.re - spec.length.sqrt()).abs() < 1e-10);
            } else {
                assert!(c.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn plane_wave_transforms_to_single_slot() {
        let spec = default_grid(2, 64);
        let k = [3i64, -2, 0];
        let f = Field::plane_wave(spec, k).unwrap();
        let g = forward_transform(&f);
        let slot = spec.flat_index(spec.slot_of_lattice(k).unwrap());
        for (flat, c) in g.coeffs().iter().enumerate() {
            if flat == slot {
                assert!((c.re - spec.length.powi(spec.dim as i32).sqrt()).abs() < 1e-8);
                assert!(c.im.abs() < 1e-8);
            } else {
                assert!(c.norm() < 1e-8, "stray mass at {flat}: {c}");
            }
        }
    }

    #[test]
    fn roundtrip_is_identity() {
        for dim in 1..=3usize {
            let n = if dim == 3 { 16 } else { 64 };
            let spec = default_grid(dim, n);
            let f = random_field(spec, 7);
            let back = inverse_transform(&forward_transform(&f));
            let num: f64 = f
                .values()
                .iter()
                .zip(back.values())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let den: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
            assert!(num.sqrt() <= 1e-12 * den.sqrt());
        }
    }

    #[test]
    fn plancherel_holds() {
        let spec = default_grid(2, 32);
        let f = random_field(spec, 3);
        let l2 = lp_norm(&f, 2.0).unwrap();
        let s2 = forward_transform(&f).l2_norm();
        assert!((l2 - s2).abs() <= 1e-12 * l2);
    }

    #[test]
    fn gaussian_matches_analytic_transform() {
        // exp(-x^2/2) has unitary transform exp(-xi^2/2); with the discrete
        // normalization the coefficient at xi_j is dxi^{1/2} exp(-xi_j^2/2).
        let spec = GridSpec::new(1, 16.0 * PI, 1024).unwrap();
        let f = Field::from_fn(spec, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).unwrap();
        let g = forward_transform(&f);
        let amp = spec.freq_step().sqrt();
        for (flat, c) in g.coeffs().iter().enumerate() {
            let xi = spec.frequency(spec.multi_index(flat))[0];
            let expect = amp * (-0.5 * xi * xi).exp();
            assert!(
                (c.re - expect).abs() < 1e-8 && c.im.abs() < 1e-8,
                "xi = {xi}: got {c}, want {expect}"
            );
        }
    }

    #[test]
    fn multiplier_identity_and_inverse_pair() {
        let spec = default_grid(1, 128);
        let f = random_field(spec, 11);
        let g = forward_transform(&f);
        let id = apply_multiplier(&g, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(g.coeffs(), id.coeffs());
        let sigma = 1.3;
        let up = apply_multiplier(&g, |xi| {
            let w = (1.0 + xi[0] * xi[0]).powf(sigma / 2.0);
            Complex64::new(w, 0.0)
        })
        .unwrap();
        let down = apply_multiplier(&up, |xi| {
            let w = (1.0 + xi[0] * xi[0]).powf(-sigma / 2.0);
            Complex64::new(w, 0.0)
        })
        .unwrap();
        for (a, b) in down.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn non_finite_symbol_is_rejected() {
        let spec = default_grid(1, 64);
        let g = forward_transform(&random_field(spec, 1));
        let err = apply_multiplier(&g, |xi| Complex64::new(1.0 / xi[0], 0.0));
        assert!(matches!(err, Err(ModkgError::NonFiniteSymbol { .. })));
    }

    #[test]
    fn lp_norm_of_constant_and_gaussian() {
        let spec = default_grid(2, 32);
        let c = Complex64::new(0.3, -0.4);
        let f = Field::from_fn(spec, |_| c).unwrap();
        let want = c.norm() * spec.length.powf(spec.dim as f64 / 2.0);
        assert!((lp_norm(&f, 2.0).unwrap() - want).abs() < 1e-12 * want);
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - c.norm()).abs() < 1e-13);

        // || exp(-x^2/2) ||_2 = pi^{1/4} in 1-D
        let spec1 = GridSpec::new(1, 16.0 * PI, 1024).unwrap();
        let g = Field::from_fn(spec1, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)).unwrap();
        let want = std::f64::consts::PI.powf(0.25);
        assert!((lp_norm(&g, 2.0).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn lp_norm_rejects_bad_exponent() {
        let spec = default_grid(1, 64);
        let f = random_field(spec, 5);
        assert!(matches!(lp_norm(&f, 0.5), Err(ModkgError::InvalidExponent { .. })));
    }

    #[test]
    fn zero_coefficients_invert_to_zero_field() {
        let spec = default_grid(1, 64);
        let g = SpectralField::zeros(spec);
        let f = inverse_transform(&g);
        assert!(f.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn single_coefficient_inverts_to_plane_wave() {
        let spec = default_grid(1, 128);
        let mut g = SpectralField::zeros(spec);
        let k = [5i64, 0, 0];
        let slot = spec.flat_index(spec.slot_of_lattice(k).unwrap());
        let amp = spec.length.powf(spec.dim as f64 / 2.0);
        g.coeffs_mut()[slot] = Complex64::new(amp, 0.0);
        let f = inverse_transform(&g);
        let wave = Field::plane_wave(spec, k).unwrap();
        for (a, b) in f.values().iter().zip(wave.values()) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn mkgf_roundtrip_is_bit_exact() {
        let spec = default_grid(2, 32);
        let f = random_field(spec, 42);
        let mut buf = Vec::new();
        write_mkgf(&f, &mut buf).unwrap();
        let g = read_mkgf(&mut buf.as_slice()).unwrap();
        assert_eq!(f.spec, g.spec);
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn grid_invariants_are_enforced() {
        assert!(GridSpec::new(1, 40.0, 1024).is_err()); // dxi = 2 pi / 40 > 1/8
        assert!(GridSpec::new(1, 16.0 * PI, 24).is_err()); // not a power of two
        assert!(GridSpec::new(4, 16.0 * PI, 64).is_err());
        assert!(GridSpec::new(1, 16.0 * PI, 8).is_err());
        assert!(GridSpec::new(1, 16.0 * PI, 1024).is_ok());
    }
}
