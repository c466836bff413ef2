//! Periodic fields on the torus and their spectral calculus.
//!
//! A [`SpectralField`] keeps its grid samples and Fourier coefficients side
//! by side. Coefficients are normalized as continuum Fourier coefficients of
//! the band-limited interpolant, `f̂(k) = (1/n²) Σ_x f(x) e^{-ik·x}`, and are
//! stored in FFT order (`index i ↔ wavenumber i` for `i ≤ n/2`, `i - n`
//! otherwise). Samples are row-major with `x` varying fastest:
//! `values[iy * n + ix] = f(ix·h, iy·h)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

// Float supplies libm-backed math without std; with std linked it is shadowed.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::grid::GridSpec;
use crate::Complex;

/// Largest mean tolerated by the inverse Laplacian and Biot–Savart.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

/// Largest conjugate-symmetry defect accepted by [`to_physical`].
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Coordinate direction for derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Real scalar field on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    values: Vec<f64>,
    coeffs: Vec<Complex>,
}

fn grid_of_len(len: usize) -> Result<GridSpec> {
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len {
        return Err(Error::Dimension(format!(
            "{len} samples do not form a square grid"
        )));
    }
    GridSpec::new(n)
}

fn check_same(a: GridSpec, b: GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!(
            "grid mismatch: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    Ok(())
}

/// Forward transform of row-major grid samples; `n` is inferred from the
/// length and must be even.
pub fn to_spectral(values: &[f64]) -> Result<SpectralField> {
    let grid = grid_of_len(values.len())?;
    Ok(SpectralField::from_values(grid, values.to_vec()))
}

/// Inverse transform of conjugate-symmetric coefficients.
pub fn to_physical(grid: GridSpec, coeffs: &[Complex]) -> Result<Vec<f64>> {
    Ok(SpectralField::from_coeffs(grid, coeffs.to_vec())?.values)
}

/// `∂_axis^order f` for `1 ≤ order ≤ 4`. The Nyquist row/column is dropped
/// for odd orders so the result stays real.
pub fn derivative(f: &SpectralField, axis: Axis, order: u32) -> Result<SpectralField> {
    if !(1..=4).contains(&order) {
        return Err(Error::Domain(format!(
            "derivative order must be in 1..=4, got {order}"
        )));
    }
    let mut c = f.coeffs.clone();
    spectral::differentiate(f.grid, &mut c, axis, order);
    Ok(SpectralField::from_coeffs_unchecked(f.grid, c))
}

/// Solves `Δψ = f` for zero-mean `ψ`.
pub fn invert_laplacian(f: &SpectralField) -> Result<SpectralField> {
    f.require_zero_mean()?;
    let mut c = f.coeffs.clone();
    spectral::invert_laplacian(f.grid, &mut c);
    Ok(SpectralField::from_coeffs_unchecked(f.grid, c))
}

/// Velocity `u = ∇⊥Δ⁻¹ω` with `∇⊥ = (-∂_y, ∂_x)`.
pub fn biot_savart(omega: &SpectralField) -> Result<VelocityField> {
    omega.require_zero_mean()?;
    let (ux, uy) = spectral::biot_savart(omega.grid, &omega.coeffs);
    Ok(VelocityField::from_coeffs(omega.grid, ux, uy))
}

/// 2/3-rule projection: zeroes every mode with `max(|k_x|, |k_y|) > n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut c = f.coeffs.clone();
    spectral::dealias(f.grid, &mut c);
    SpectralField::from_coeffs_unchecked(f.grid, c)
}

/// Fields admitting the grid `L²` inner product `h² Σ f·g`.
pub trait InnerProduct {
    fn inner(&self, other: &Self) -> Result<f64>;
}

/// `⟨f, g⟩_{L²}` by the trapezoidal rule, exact for band-limited fields.
pub fn inner_product_l2<T: InnerProduct>(f: &T, g: &T) -> Result<f64> {
    f.inner(g)
}

impl InnerProduct for SpectralField {
    fn inner(&self, other: &Self) -> Result<f64> {
        check_same(self.grid, other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_measure())
    }
}

impl InnerProduct for VelocityField {
    fn inner(&self, other: &Self) -> Result<f64> {
        Ok(self.ux.inner(&other.ux)? + self.uy.inner(&other.uy)?)
    }
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            coeffs: vec![Complex::new(0.0, 0.0); grid.len()],
        }
    }

    /// Builds a field from row-major samples.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid");
        let coeffs = Fft2d::new(grid.n()).coeffs_of(&values);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    /// Samples `f(x, y)` at the grid points `(ix·h, iy·h)`.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..n {
            let y = grid.coord(iy);
            for ix in 0..n {
                values.push(f(grid.coord(ix), y));
            }
        }
        Self::from_values(grid, values)
    }

    /// Builds a field from coefficients, rejecting spectra that are not the
    /// transform of a real field.
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a {}×{} grid",
                coeffs.len(),
                grid.n(),
                grid.n()
            )));
        }
        let defect = spectral::symmetry_defect(grid, &coeffs);
        if defect > SYMMETRY_TOL {
            return Err(Error::Consistency(format!(
                "coefficients violate conjugate symmetry by {defect:e}"
            )));
        }
        Ok(Self::from_coeffs_unchecked(grid, coeffs))
    }

    /// Builds a field from coefficients known to be conjugate-symmetric.
    pub fn from_coeffs_unchecked(grid: GridSpec, coeffs: Vec<Complex>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        let values = Fft2d::new(grid.n()).values_of(&coeffs);
        Self {
            grid,
            values,
            coeffs,
        }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex> {
        self.coeffs
    }

    /// Sample at grid point `(ix, iy)`.
    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.flat(ix, iy)]
    }

    /// Coefficient of wavenumber `(k_x, k_y)`.
    pub fn coeff(&self, kx: i64, ky: i64) -> Complex {
        let g = self.grid;
        self.coeffs[g.flat(g.index_of(kx), g.index_of(ky))]
    }

    /// Spatial mean, the `k = 0` coefficient.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn require_zero_mean(&self) -> Result<()> {
        let mean = self.mean();
        if mean.abs() > ZERO_MEAN_TOL {
            return Err(Error::MeanViolation { mean });
        }
        Ok(())
    }

    /// Copy with the mean coefficient removed.
    pub fn without_mean(&self) -> Self {
        let mut c = self.coeffs.clone();
        c[0] = Complex::new(0.0, 0.0);
        Self::from_coeffs_unchecked(self.grid, c)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `‖f‖²_{L²}` via discrete Parseval, `4π² Σ |f̂|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        spectral::norm_sq(&self.coeffs)
    }

    /// `‖f‖_{L¹} = h² Σ |f|`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sobolev norm `‖f‖_{H^σ}` with weights `(1 + |k|²)^σ`.
    pub fn sobolev_norm(&self, sigma: f64) -> f64 {
        let g = self.grid;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (kx, ky) = g.wavevector(i);
                let k2 = (kx * kx + ky * ky) as f64;
                (1.0 + k2).powf(sigma) * c.norm_sqr()
            })
            .sum();
        (GridSpec::DOMAIN_MEASURE * s).sqrt()
    }

    pub fn laplacian(&self) -> Self {
        let mut c = self.coeffs.clone();
        spectral::laplacian(self.grid, &mut c);
        Self::from_coeffs_unchecked(self.grid, c)
    }

    /// Spectral gradient `(∂_x f, ∂_y f)`.
    pub fn gradient(&self) -> VelocityField {
        let mut cx = self.coeffs.clone();
        let mut cy = self.coeffs.clone();
        spectral::differentiate(self.grid, &mut cx, Axis::X, 1);
        spectral::differentiate(self.grid, &mut cy, Axis::Y, 1);
        VelocityField::from_coeffs(self.grid, cx, cy)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// Restriction to a coarser grid by spectral truncation. The coarse
    /// Nyquist modes are dropped so the result is an orthogonal projection.
    pub fn truncate_to(&self, coarse: GridSpec) -> Result<Self> {
        let (nf, nc) = (self.grid.n(), coarse.n());
        if nc > nf || nf % nc != 0 {
            return Err(Error::Resample(format!(
                "cannot restrict a {nf}-grid to a non-nested {nc}-grid"
            )));
        }
        if nc == nf {
            return Ok(self.clone());
        }
        let mut c = vec![Complex::new(0.0, 0.0); coarse.len()];
        let half = (nc / 2) as i64;
        for (i, v) in c.iter_mut().enumerate() {
            let (kx, ky) = coarse.wavevector(i);
            if kx.abs() < half && ky.abs() < half {
                *v = self.coeff(kx, ky);
            }
        }
        Ok(Self::from_coeffs_unchecked(coarse, c))
    }
}

macro_rules! impl_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl<'a> $tr<&'a SpectralField> for &'a SpectralField {
            type Output = SpectralField;
            fn $m(self, rhs: &'a SpectralField) -> SpectralField {
                assert_eq!(self.grid, rhs.grid, "grid mismatch");
                SpectralField {
                    grid: self.grid,
                    values: self.values.iter().zip(&rhs.values).map(|(a, b)| a $op b).collect(),
                    coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a $op b).collect(),
                }
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// Two-component velocity (or vector forcing) field.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub ux: SpectralField,
    pub uy: SpectralField,
}

impl VelocityField {
    pub fn new(ux: SpectralField, uy: SpectralField) -> Result<Self> {
        check_same(ux.grid, uy.grid)?;
        Ok(Self { ux, uy })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            ux: SpectralField::zeros(grid),
            uy: SpectralField::zeros(grid),
        }
    }

    pub fn from_coeffs(grid: GridSpec, cx: Vec<Complex>, cy: Vec<Complex>) -> Self {
        let (vx, vy) = Fft2d::new(grid.n()).values_of_pair(&cx, &cy);
        Self {
            ux: SpectralField {
                grid,
                values: vx,
                coeffs: cx,
            },
            uy: SpectralField {
                grid,
                values: vy,
                coeffs: cy,
            },
        }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.ux.grid
    }

    /// `∂_x u_y − ∂_y u_x`.
    pub fn curl(&self) -> SpectralField {
        let g = self.grid();
        let c = spectral::curl(g, &self.ux.coeffs, &self.uy.coeffs);
        SpectralField::from_coeffs_unchecked(g, c)
    }

    /// `∂_x u_x + ∂_y u_y`.
    pub fn divergence(&self) -> SpectralField {
        let g = self.grid();
        let mut cx = self.ux.coeffs.clone();
        let mut cy = self.uy.coeffs.clone();
        spectral::differentiate(g, &mut cx, Axis::X, 1);
        spectral::differentiate(g, &mut cy, Axis::Y, 1);
        let c = cx.iter().zip(&cy).map(|(a, b)| a + b).collect();
        SpectralField::from_coeffs_unchecked(g, c)
    }

    /// `max_k |k·û(k)|`, the spectral divergence defect.
    pub fn spectral_divergence(&self) -> f64 {
        self.divergence()
            .coeffs
            .iter()
            .fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.ux.l2_norm_sq() + self.uy.l2_norm_sq()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Largest pointwise speed `max |u(x)|`.
    pub fn max_speed(&self) -> f64 {
        self.ux
            .values
            .iter()
            .zip(&self.uy.values)
            .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            ux: self.ux.scaled(a),
            uy: self.uy.scaled(a),
        }
    }

    pub fn laplacian(&self) -> Self {
        Self {
            ux: self.ux.laplacian(),
            uy: self.uy.laplacian(),
        }
    }

    pub fn truncate_to(&self, coarse: GridSpec) -> Result<Self> {
        Ok(Self {
            ux: self.ux.truncate_to(coarse)?,
            uy: self.uy.truncate_to(coarse)?,
        })
    }
}

impl<'a> Add<&'a VelocityField> for &'a VelocityField {
    type Output = VelocityField;
    fn add(self, rhs: &'a VelocityField) -> VelocityField {
        VelocityField {
            ux: &self.ux + &rhs.ux,
            uy: &self.uy + &rhs.uy,
        }
    }
}

impl<'a> Sub<&'a VelocityField> for &'a VelocityField {
    type Output = VelocityField;
    fn sub(self, rhs: &'a VelocityField) -> VelocityField {
        VelocityField {
            ux: &self.ux - &rhs.ux,
            uy: &self.uy - &rhs.uy,
        }
    }
}

/// Coefficient-level kernels shared by the solvers. Arrays are in the FFT
/// layout of [`SpectralField`].
pub mod spectral {
    use super::*;

    /// `|k|²` at flattened index `idx`.
    #[inline]
    pub fn k_sq(grid: GridSpec, idx: usize) -> f64 {
        let (kx, ky) = grid.wavevector(idx);
        (kx * kx + ky * ky) as f64
    }

    /// `(idx, k_x, k_y)` over the storage in order, without per-mode
    /// integer division.
    pub fn modes(grid: GridSpec) -> impl Iterator<Item = (usize, i64, i64)> {
        let n = grid.n();
        (0..n).flat_map(move |iy| {
            let ky = grid.wavenumber(iy);
            (0..n).map(move |ix| (iy * n + ix, grid.wavenumber(ix), ky))
        })
    }

    /// Largest `|ĉ(k) − conj ĉ(−k)|`.
    pub fn symmetry_defect(grid: GridSpec, c: &[Complex]) -> f64 {
        let n = grid.n();
        let mut worst: f64 = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let a = c[grid.flat(ix, iy)];
                let b = c[grid.mirror(ix, iy)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Wavenumber used by odd derivatives: Nyquist is dropped.
    #[inline]
    fn odd_k(grid: GridSpec, k: i64) -> f64 {
        if 2 * k == grid.n() as i64 {
            0.0
        } else {
            k as f64
        }
    }

    /// Multiplies by `(i k_axis)^order`.
    pub fn differentiate(grid: GridSpec, c: &mut [Complex], axis: Axis, order: u32) {
        let odd = order % 2 == 1;
        for (idx, kx, ky) in modes(grid) {
            let k = match axis {
                Axis::X => kx,
                Axis::Y => ky,
            };
            let k = if odd { odd_k(grid, k) } else { k as f64 };
            c[idx] *= Complex::new(0.0, k).powu(order);
        }
    }

    pub fn laplacian(grid: GridSpec, c: &mut [Complex]) {
        for (idx, kx, ky) in modes(grid) {
            c[idx] *= -((kx * kx + ky * ky) as f64);
        }
    }

    /// Divides by `−|k|²` and zeroes the mean.
    pub fn invert_laplacian(grid: GridSpec, c: &mut [Complex]) {
        for (idx, kx, ky) in modes(grid).skip(1) {
            c[idx] /= -((kx * kx + ky * ky) as f64);
        }
        c[0] = Complex::new(0.0, 0.0);
    }

    /// `(û_x, û_y) = (i k_y, −i k_x) ω̂ / |k|²`, Nyquist derivatives dropped.
    pub fn biot_savart(grid: GridSpec, omega: &[Complex]) -> (Vec<Complex>, Vec<Complex>) {
        let mut ux = vec![Complex::new(0.0, 0.0); grid.len()];
        let mut uy = vec![Complex::new(0.0, 0.0); grid.len()];
        for (idx, kx, ky) in modes(grid).skip(1) {
            let w = omega[idx] / ((kx * kx + ky * ky) as f64);
            ux[idx] = Complex::new(0.0, odd_k(grid, ky)) * w;
            uy[idx] = Complex::new(0.0, -odd_k(grid, kx)) * w;
        }
        (ux, uy)
    }

    /// `ik_x û_y − ik_y û_x`.
    pub fn curl(grid: GridSpec, ux: &[Complex], uy: &[Complex]) -> Vec<Complex> {
        modes(grid)
            .map(|(idx, kx, ky)| {
                Complex::new(0.0, odd_k(grid, kx)) * uy[idx] - Complex::new(0.0, odd_k(grid, ky)) * ux[idx]
            })
            .collect()
    }

    pub fn dealias(grid: GridSpec, c: &mut [Complex]) {
        for (idx, kx, ky) in modes(grid) {
            if !grid.is_retained(kx, ky) {
                c[idx] = Complex::new(0.0, 0.0);
            }
        }
    }

    /// `4π² Σ Re(â conj b̂)`, the `L²` inner product by Parseval.
    pub fn inner(a: &[Complex], b: &[Complex]) -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum();
        GridSpec::DOMAIN_MEASURE * s
    }

    pub fn norm_sq(a: &[Complex]) -> f64 {
        GridSpec::DOMAIN_MEASURE * a.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Energy `½‖u‖²` of the Biot–Savart velocity of `ω̂`.
    pub fn energy_of_vorticity(grid: GridSpec, omega: &[Complex]) -> f64 {
        let s: f64 = modes(grid)
            .skip(1)
            .map(|(idx, kx, ky)| {
                let (ox, oy) = (odd_k(grid, kx), odd_k(grid, ky));
                let k2 = (kx * kx + ky * ky) as f64;
                omega[idx].norm_sqr() * (ox * ox + oy * oy) / (k2 * k2)
            })
            .sum();
        0.5 * GridSpec::DOMAIN_MEASURE * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Random zero-mean field without Nyquist content.
    fn random_band_limited(g: GridSpec, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::from_values(g, v);
        let mut c = f.coeffs().to_vec();
        c[0] = Complex::new(0.0, 0.0);
        for (idx, x) in c.iter_mut().enumerate() {
            if idx % g.n() == g.nyquist() || idx / g.n() == g.nyquist() {
                *x = Complex::new(0.0, 0.0);
            }
        }
        SpectralField::from_coeffs(g, c).unwrap()
    }

    /// Direct `O(n⁴)` transform used as an independent oracle.
    fn naive_forward(n: usize, v: &[f64]) -> Vec<Complex> {
        let g = grid(n);
        let mut out = vec![Complex::new(0.0, 0.0); n * n];
        for (idx, o) in out.iter_mut().enumerate() {
            let (kx, ky) = g.wavevector(idx);
            for iy in 0..n {
                for ix in 0..n {
                    let th = -(kx as f64 * g.coord(ix) + ky as f64 * g.coord(iy));
                    *o += Complex::new(th.cos(), th.sin()) * v[g.flat(ix, iy)];
                }
            }
            *o /= (n * n) as f64;
        }
        out
    }

    fn naive_inverse(n: usize, c: &[Complex]) -> Vec<f64> {
        let g = grid(n);
        let mut out = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let mut s = Complex::new(0.0, 0.0);
                for (idx, ci) in c.iter().enumerate() {
                    let (kx, ky) = g.wavevector(idx);
                    let th = kx as f64 * g.coord(ix) + ky as f64 * g.coord(iy);
                    s += ci * Complex::new(th.cos(), th.sin());
                }
                out[g.flat(ix, iy)] = s.re;
            }
        }
        out
    }

    #[test]
    fn sine_mode_coefficients() {
        let g = grid(16);
        let f = SpectralField::from_fn(g, |x, _| x.sin());
        assert!((f.coeff(1, 0) - Complex::new(0.0, -0.5)).norm() < 1e-14);
        assert!((f.coeff(-1, 0) - Complex::new(0.0, 0.5)).norm() < 1e-14);
        for (idx, c) in f.coeffs().iter().enumerate() {
            let (kx, ky) = g.wavevector(idx);
            if !(ky == 0 && kx.abs() == 1) {
                assert!(c.norm() < 1e-14);
            }
        }
        let back = to_physical(g, f.coeffs()).unwrap();
        assert!(max_diff(&back, f.values()) < 1e-12);
    }

    #[test]
    fn constant_has_only_mean() {
        let f = to_spectral(&vec![1.0; 64]).unwrap();
        assert!((f.coeff(0, 0) - Complex::new(1.0, 0.0)).norm() < 1e-15);
        assert!(f.coeffs().iter().skip(1).all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(to_spectral(&[0.0; 63]), Err(Error::Dimension(_))));
        // 9 × 9 is square but odd
        assert!(matches!(to_spectral(&[0.0; 81]), Err(Error::Dimension(_))));
    }

    #[test]
    fn forward_matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = to_spectral(&v).unwrap();
        let want = naive_forward(8, &v);
        for (a, b) in f.coeffs().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_matches_naive_sum() {
        let g = grid(8);
        let sym = random_band_limited(g, 5);
        let want = naive_inverse(8, sym.coeffs());
        let got = to_physical(g, sym.coeffs()).unwrap();
        assert!(max_diff(&got, &want) < 1e-12);
    }

    #[test]
    fn cosine_from_coefficients_and_zero() {
        let g = grid(16);
        let mut c = vec![Complex::new(0.0, 0.0); g.len()];
        c[g.flat(1, 0)] = Complex::new(0.5, 0.0);
        c[g.flat(15, 0)] = Complex::new(0.5, 0.0);
        let v = to_physical(g, &c).unwrap();
        let want = SpectralField::from_fn(g, |x, _| x.cos());
        assert!(max_diff(&v, want.values()) < 1e-14);
        let z = to_physical(g, &vec![Complex::new(0.0, 0.0); g.len()]).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn asymmetric_coefficients_rejected() {
        let g = grid(8);
        let mut c = vec![Complex::new(0.0, 0.0); g.len()];
        c[g.flat(1, 0)] = Complex::new(1.0, 0.0);
        assert!(matches!(to_physical(g, &c), Err(Error::Consistency(_))));
    }

    #[test]
    fn derivatives_of_modes() {
        let g = grid(16);
        let s = SpectralField::from_fn(g, |x, _| x.sin());
        let ds = derivative(&s, Axis::X, 1).unwrap();
        let c = SpectralField::from_fn(g, |x, _| x.cos());
        assert!(max_diff(ds.values(), c.values()) < 1e-12);

        let one = SpectralField::from_fn(g, |_, _| 3.0);
        let d = derivative(&one, Axis::Y, 1).unwrap();
        assert!(d.max_abs() < 1e-14);

        let f = SpectralField::from_fn(g, |x, y| x.sin() * y.sin());
        let lap = &derivative(&f, Axis::X, 2).unwrap() + &derivative(&f, Axis::Y, 2).unwrap();
        assert!(max_diff(lap.values(), f.scaled(-2.0).values()) < 1e-12);
        assert!(derivative(&f, Axis::X, 5).is_err());
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let g = grid(8);
        let f = SpectralField::from_fn(g, |x, _| (4.0 * x).cos());
        let d = derivative(&f, Axis::X, 1).unwrap();
        assert!(d.max_abs() < 1e-14);
        let d2 = derivative(&f, Axis::X, 2).unwrap();
        assert!(max_diff(d2.values(), f.scaled(-16.0).values()) < 1e-11);
    }

    #[test]
    fn inverse_laplacian_examples() {
        let g = grid(16);
        let s = SpectralField::from_fn(g, |x, _| x.sin());
        let p = invert_laplacian(&s).unwrap();
        assert!(max_diff(p.values(), s.scaled(-1.0).values()) < 1e-13);

        let f = SpectralField::from_fn(g, |x, y| -2.0 * x.sin() * y.sin());
        let p = invert_laplacian(&f).unwrap();
        let want = SpectralField::from_fn(g, |x, y| x.sin() * y.sin());
        assert!(max_diff(p.values(), want.values()) < 1e-13);

        let one = SpectralField::from_fn(g, |_, _| 1.0);
        match invert_laplacian(&one) {
            Err(Error::MeanViolation { mean }) => assert!((mean - 1.0).abs() < 1e-14),
            other => panic!("expected mean violation, got {other:?}"),
        }
    }

    #[test]
    fn laplacian_inverts() {
        let g = grid(32);
        let f = random_band_limited(g, 9);
        let back = invert_laplacian(&f).unwrap().laplacian();
        assert!(max_diff(back.values(), f.values()) < 1e-10);
        assert!(invert_laplacian(&f).unwrap().mean().abs() < 1e-15);
    }

    #[test]
    fn biot_savart_single_mode_and_zero() {
        let g = grid(16);
        let w = SpectralField::from_fn(g, |x, _| x.sin());
        let u = biot_savart(&w).unwrap();
        assert!(u.ux.max_abs() < 1e-14);
        let want = SpectralField::from_fn(g, |x, _| -x.cos());
        assert!(max_diff(u.uy.values(), want.values()) < 1e-13);
        let z = biot_savart(&SpectralField::zeros(g)).unwrap();
        assert_eq!(z.max_speed(), 0.0);
        assert!(matches!(
            biot_savart(&SpectralField::from_fn(g, |_, _| 0.5)),
            Err(Error::MeanViolation { .. })
        ));
    }

    #[test]
    fn biot_savart_recovers_curl_for_random_fields() {
        let g = grid(32);
        for seed in 0..100 {
            let w = random_band_limited(g, 100 + seed);
            let u = biot_savart(&w).unwrap();
            assert!(max_diff(u.curl().values(), w.values()) < 1e-10);
            assert!(u.spectral_divergence() < 1e-10);
            assert!(u.ux.mean().abs() < 1e-15 && u.uy.mean().abs() < 1e-15);
        }
    }

    #[test]
    fn dealias_examples() {
        let g = grid(16);
        let mut c = vec![Complex::new(0.0, 0.0); g.len()];
        c[g.flat(7, 0)] = Complex::new(0.5, 0.0);
        c[g.flat(9, 0)] = Complex::new(0.5, 0.0);
        c[g.flat(1, 1)] = Complex::new(0.25, 0.1);
        c[g.flat(15, 15)] = Complex::new(0.25, -0.1);
        let f = SpectralField::from_coeffs(g, c).unwrap();
        let d = dealias(&f);
        assert_eq!(d.coeff(7, 0), Complex::new(0.0, 0.0));
        assert_eq!(d.coeff(1, 1), f.coeff(1, 1));
        let r = random_band_limited(g, 4);
        assert!(dealias(&r).l2_norm() <= r.l2_norm());
    }

    #[test]
    fn inner_product_examples() {
        let g = grid(16);
        let s = SpectralField::from_fn(g, |x, _| x.sin());
        let c = SpectralField::from_fn(g, |x, _| x.cos());
        let one = SpectralField::from_fn(g, |_, _| 1.0);
        assert!((inner_product_l2(&s, &s).unwrap() - 2.0 * PI * PI).abs() < 1e-10);
        assert!(inner_product_l2(&s, &c).unwrap().abs() < 1e-12);
        assert!((inner_product_l2(&one, &one).unwrap() - 4.0 * PI * PI).abs() < 1e-10);
        let other = SpectralField::zeros(grid(8));
        assert!(matches!(s.inner(&other), Err(Error::Dimension(_))));
    }

    #[test]
    fn truncation_requires_nesting() {
        let f = SpectralField::from_fn(grid(24), |x, y| x.sin() * (2.0 * y).cos());
        let c = f.truncate_to(grid(12)).unwrap();
        let want = SpectralField::from_fn(grid(12), |x, y| x.sin() * (2.0 * y).cos());
        assert!(max_diff(c.values(), want.values()) < 1e-13);
        assert!(matches!(f.truncate_to(grid(10)), Err(Error::Resample(_))));
    }

    #[test]
    fn energy_of_vorticity_matches_velocity_norm() {
        let g = grid(16);
        let w = random_band_limited(g, 77);
        let u = biot_savart(&w).unwrap();
        let e = spectral::energy_of_vorticity(g, w.coeffs());
        assert!((e - 0.5 * u.inner(&u).unwrap()).abs() < 1e-12 * e.max(1.0));
    }
}
