//! Mixed-radix complex FFT for arbitrary lengths and its 2D row/column
//! extension.
//!
//! Lengths are factored into primes; each prime `p` is handled by a direct
//! `p`-point butterfly, so lengths with large prime factors stay correct but
//! slow. Forward transforms use the `e^{-2πi jk/N}` kernel and are unscaled.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Float supplies libm-backed math without std; with std linked it is shadowed.
#[allow(unused_imports)]
use num_traits::Float;

use crate::Complex;

/// Precomputed twiddles and factorization for one transform length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    factors: Vec<usize>,
    twiddles: Vec<Complex>,
    max_radix: usize,
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    let mut p = 2;
    while n > 1 {
        if p * p > n {
            factors.push(n);
            break;
        }
        while n.is_multiple_of(p) {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    factors
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "transform length must be positive");
        let factors = factorize(n);
        let twiddles = (0..n)
            .map(|j| {
                let theta = -2.0 * PI * j as f64 / n as f64;
                Complex::new(theta.cos(), theta.sin())
            })
            .collect();
        let max_radix = factors.iter().copied().max().unwrap_or(1);
        Self {
            n,
            factors,
            twiddles,
            max_radix,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn twiddle(&self, j: usize, inverse: bool) -> Complex {
        let w = self.twiddles[j % self.n];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    /// Transforms `input` (read with `stride`) into `out`.
    pub fn transform(&self, input: &[Complex], stride: usize, out: &mut [Complex], inverse: bool) {
        debug_assert_eq!(out.len(), self.n);
        let mut scratch = vec![Complex::new(0.0, 0.0); self.max_radix];
        self.recurse(input, 0, stride, out, &self.factors, inverse, &mut scratch);
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        input: &[Complex],
        offset: usize,
        stride: usize,
        out: &mut [Complex],
        factors: &[usize],
        inverse: bool,
        scratch: &mut [Complex],
    ) {
        let len = out.len();
        if len == 1 {
            out[0] = input[offset];
            return;
        }
        let p = factors[0];
        let m = len / p;
        for r in 0..p {
            self.recurse(
                input,
                offset + r * stride,
                stride * p,
                &mut out[r * m..(r + 1) * m],
                &factors[1..],
                inverse,
                scratch,
            );
        }
        // twiddle exponents are in units of the sub-length `len`
        let step = self.n / len;
        if p == 2 {
            for k in 0..m {
                let a = out[k];
                let b = out[m + k] * self.twiddle(k * step, inverse);
                out[k] = a + b;
                out[m + k] = a - b;
            }
            return;
        }
        let root_step = self.n / p;
        for k in 0..m {
            for r in 0..p {
                scratch[r] = out[r * m + k] * self.twiddle((r * k % len) * step, inverse);
            }
            for q in 0..p {
                let mut acc = scratch[0];
                for (r, s) in scratch.iter().enumerate().take(p).skip(1) {
                    acc += *s * self.twiddle((r * q % p) * root_step, inverse);
                }
                out[q * m + k] = acc;
            }
        }
    }
}

/// Square 2D transform built from row and column passes.
///
/// With the `rustfft` feature the passes run through `rustfft` (which needs
/// `std`); otherwise they use the portable [`FftPlan`].
#[derive(Clone)]
pub struct Fft2d {
    n: usize,
    backend: Backend,
    buf: Vec<Complex>,
}

#[derive(Clone)]
enum Backend {
    #[cfg_attr(feature = "rustfft", allow(dead_code))]
    Portable { plan: FftPlan, line: Vec<Complex> },
    #[cfg(feature = "rustfft")]
    Rust {
        forward: alloc::sync::Arc<dyn rustfft::Fft<f64>>,
        inverse: alloc::sync::Arc<dyn rustfft::Fft<f64>>,
        scratch: Vec<Complex>,
    },
}

impl core::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let name = match self.backend {
            Backend::Portable { .. } => "portable",
            #[cfg(feature = "rustfft")]
            Backend::Rust { .. } => "rustfft",
        };
        f.debug_struct("Fft2d").field("n", &self.n).field("backend", &name).finish()
    }
}

/// Columns are transformed in blocks of this many, gathered into
/// contiguous rows so the 1D transforms run on cache-resident data.
#[cfg(feature = "rustfft")]
const COLUMN_BLOCK: usize = 16;

impl Fft2d {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            backend: Self::backend(n),
            buf: Vec::new(),
        }
    }

    #[cfg(feature = "rustfft")]
    fn backend(n: usize) -> Backend {
        use std::sync::{Mutex, OnceLock};
        type Plans = (alloc::sync::Arc<dyn rustfft::Fft<f64>>, alloc::sync::Arc<dyn rustfft::Fft<f64>>);
        // fields build transforms on the fly, so plans are cached per length
        static PLANS: OnceLock<Mutex<alloc::collections::BTreeMap<usize, Plans>>> = OnceLock::new();
        let cache = PLANS.get_or_init(Default::default);
        let (forward, inverse) = {
            let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
            map.entry(n)
                .or_insert_with(|| {
                    let mut planner = rustfft::FftPlanner::<f64>::new();
                    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
                })
                .clone()
        };
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Backend::Rust {
            forward,
            inverse,
            scratch: vec![Complex::new(0.0, 0.0); len],
        }
    }

    #[cfg(not(feature = "rustfft"))]
    fn backend(n: usize) -> Backend {
        Backend::Portable {
            plan: FftPlan::new(n),
            line: vec![Complex::new(0.0, 0.0); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn run(&mut self, data: &mut [Complex], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        match &mut self.backend {
            Backend::Portable { plan, line } => {
                self.buf.resize(n * n, Complex::new(0.0, 0.0));
                for row in 0..n {
                    plan.transform(&data[row * n..(row + 1) * n], 1, line, inverse);
                    self.buf[row * n..(row + 1) * n].copy_from_slice(line);
                }
                for col in 0..n {
                    plan.transform(&self.buf[col..], n, line, inverse);
                    for (row, v) in line.iter().enumerate() {
                        data[row * n + col] = *v;
                    }
                }
            }
            #[cfg(feature = "rustfft")]
            Backend::Rust {
                forward,
                inverse: inv,
                scratch,
            } => {
                let plan = if inverse { inv } else { forward };
                plan.process_with_scratch(data, scratch);
                self.buf.resize(COLUMN_BLOCK.min(n) * n, Complex::new(0.0, 0.0));
                let block = &mut self.buf;
                for c0 in (0..n).step_by(COLUMN_BLOCK) {
                    let w = COLUMN_BLOCK.min(n - c0);
                    for r in 0..n {
                        for j in 0..w {
                            block[j * n + r] = data[r * n + c0 + j];
                        }
                    }
                    plan.process_with_scratch(&mut block[..w * n], scratch);
                    for r in 0..n {
                        for j in 0..w {
                            data[r * n + c0 + j] = block[j * n + r];
                        }
                    }
                }
            }
        }
    }

    /// Unscaled forward transform in place.
    pub fn forward(&mut self, data: &mut [Complex]) {
        self.run(data, false);
    }

    /// Unscaled inverse transform in place.
    pub fn inverse(&mut self, data: &mut [Complex]) {
        self.run(data, true);
    }

    /// Fourier coefficients `(1/n²) Σ v e^{-ik·x}` of a real grid.
    pub fn coeffs_of(&mut self, values: &[f64]) -> Vec<Complex> {
        let mut data: Vec<Complex> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward(&mut data);
        let scale = 1.0 / (values.len() as f64);
        for c in data.iter_mut() {
            *c *= scale;
        }
        data
    }

    /// Grid values `Σ ĉ e^{ik·x}`; the imaginary part is discarded.
    pub fn values_of(&mut self, coeffs: &[Complex]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Synthesizes two real fields from Hermitian spectra with one complex
    /// transform, using `IFFT(â + i b̂) = a + i b`.
    pub fn values_of_pair(&mut self, a: &[Complex], b: &[Complex]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex::new(0.0, 1.0);
        let mut data: Vec<Complex> = a.iter().zip(b).map(|(x, y)| *x + i * *y).collect();
        self.inverse(&mut data);
        data.into_iter().map(|c| (c.re, c.im)).unzip()
    }
}
