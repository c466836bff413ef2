use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform `n × n` grid on the torus `[0, 2π)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    /// Smallest supported resolution.
    pub const MIN_N: usize = 8;

    /// Area of the torus, `(2π)²`.
    pub const DOMAIN_MEASURE: f64 = 4.0 * PI * PI;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_N || !n.is_multiple_of(2) {
            return Err(Error::Dimension(alloc::format!(
                "grid size must be even and at least {}, got {n}",
                Self::MIN_N
            )));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points, `n²`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell size `h = 2π / n`.
    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Cell area `h²`.
    #[inline]
    pub fn cell_measure(&self) -> f64 {
        let h = self.h();
        h * h
    }

    pub fn domain_measure(&self) -> f64 {
        Self::DOMAIN_MEASURE
    }

    /// Coordinate of the `i`-th grid line, `i·h`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Coordinate of the `i`-th grid line mapped into `[-π, π)`.
    #[inline]
    pub fn centered_coord(&self, i: usize) -> f64 {
        if 2 * i < self.n {
            self.coord(i)
        } else {
            self.coord(i) - 2.0 * PI
        }
    }

    /// Signed wavenumber stored at FFT index `i`, in `{-n/2+1, …, n/2}`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if 2 * i <= self.n {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index holding wavenumber `k` (taken modulo `n`).
    #[inline]
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Index of the Nyquist wavenumber `n/2`.
    #[inline]
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Flattened storage index of row `iy`, column `ix` (row-major, `x` fastest).
    #[inline]
    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    /// Index of the conjugate partner `-k` of the coefficient at `(ix, iy)`.
    #[inline]
    pub fn mirror(&self, ix: usize, iy: usize) -> usize {
        let n = self.n;
        self.flat((n - ix) % n, (n - iy) % n)
    }

    /// `(k_x, k_y)` for flattened index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> (i64, i64) {
        (self.wavenumber(idx % self.n), self.wavenumber(idx / self.n))
    }

    /// Whether mode `(k_x, k_y)` survives the 2/3 rule, `max(|k_x|, |k_y|) ≤ n/3`.
    #[inline]
    pub fn is_retained(&self, kx: i64, ky: i64) -> bool {
        let kmax = kx.unsigned_abs().max(ky.unsigned_abs()) as usize;
        3 * kmax <= self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_small_sizes() {
        assert!(GridSpec::new(65).is_err());
        assert!(GridSpec::new(6).is_err());
        assert!(GridSpec::new(0).is_err());
        assert!(GridSpec::new(8).is_ok());
    }

    #[test]
    fn cell_size_tiles_the_period() {
        let g = GridSpec::new(48).unwrap();
        assert!((g.h() * 48.0 - 2.0 * PI).abs() < 1e-14);
        assert!((g.cell_measure() * g.len() as f64 - GridSpec::DOMAIN_MEASURE).abs() < 1e-12);
    }

    #[test]
    fn wavenumber_layout() {
        let g = GridSpec::new(8).unwrap();
        let ks: alloc::vec::Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, [0, 1, 2, 3, 4, -3, -2, -1]);
        for k in -3..=4 {
            assert_eq!(g.wavenumber(g.index_of(k)), k);
        }
    }

    #[test]
    fn two_thirds_rule_boundary() {
        let g = GridSpec::new(16).unwrap();
        assert!(g.is_retained(5, -5));
        assert!(!g.is_retained(6, 0));
        assert!(!g.is_retained(7, 0));
        assert!(g.is_retained(1, 1));
    }
}
