//! Rearrangement-invariant quantities of grid functions.
//!
//! Grid functions are read as piecewise constant on the `n²` cells of area
//! `h²`. The supremum of `∫_E |f|` over sets of measure `s` then fills the
//! largest cells first, so the maximal function `M_s` is the piecewise
//! linear interpolant of the sorted prefix sums.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Float supplies libm-backed math without std; with std linked it is shadowed.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::quadrature::{adaptive_gauss, gauss_legendre_4};
use crate::solver::{Forcing, TrajectorySample};

const LATTICE_SNAP: f64 = 1e-9;
const SEGMENT_REL_TOL: f64 = 1e-12;

/// Sorted magnitudes and their measure-weighted prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementProfile {
    cell_measure: f64,
    sorted_abs: Vec<f64>,
    /// `cum[k] = M_{k h²}`, `k = 0..=N`
    cum: Vec<f64>,
}

/// Profile of the grid values of `f`.
pub fn profile(f: &SpectralField) -> RearrangementProfile {
    profile_of_values(f.values(), f.grid().cell_measure())
}

/// Profile of raw cell values with cell area `cell_measure`.
pub fn profile_of_values(values: &[f64], cell_measure: f64) -> RearrangementProfile {
    let mut sorted_abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    // stable sort: equal magnitudes keep their flattened-index order
    sorted_abs.sort_by(|a, b| b.total_cmp(a));
    let mut cum = Vec::with_capacity(sorted_abs.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for v in &sorted_abs {
        acc += v;
        cum.push(acc * cell_measure);
    }
    RearrangementProfile {
        cell_measure,
        sorted_abs,
        cum,
    }
}

impl RearrangementProfile {
    /// Builds a profile from lattice values `cum[k] = M_{k h²}`; the slope
    /// on each segment plays the role of the sorted magnitude.
    pub fn from_cumulative(cell_measure: f64, cum: Vec<f64>) -> Result<Self> {
        if cum.is_empty() || cum[0] != 0.0 {
            return Err(Error::Consistency("cumulative profile must start at 0".into()));
        }
        let sorted_abs = cum.windows(2).map(|w| (w[1] - w[0]) / cell_measure).collect();
        Ok(Self {
            cell_measure,
            sorted_abs,
            cum,
        })
    }

    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    pub fn sorted_abs(&self) -> &[f64] {
        &self.sorted_abs
    }

    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    /// Measure of the whole domain, `N h²`.
    pub fn total_measure(&self) -> f64 {
        self.sorted_abs.len() as f64 * self.cell_measure
    }

    /// `‖f‖_{L¹} = M_{|𝕋²|}`.
    pub fn l1_norm(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    /// `M_s`, exact at lattice measures and linear in between.
    pub fn maximal_function(&self, s: f64) -> Result<f64> {
        let total = self.total_measure();
        if !(s >= 0.0 && s <= total * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("measure s = {s} outside [0, {total}]")));
        }
        let x = s / self.cell_measure;
        let k = x.round();
        if (x - k).abs() < LATTICE_SNAP {
            return Ok(self.cum[(k as usize).min(self.sorted_abs.len())]);
        }
        let k = x.floor() as usize;
        Ok(self.cum[k] + (x - k as f64) * self.cell_measure * self.sorted_abs[k])
    }

    /// `∫₀^upper M_s^q ds/s`, segment by segment. On segment `k` the
    /// integrand is `(a + b s)^q / s`; the first segment has `a = 0` and is
    /// integrated in closed form, the others in closed form for `q ∈ {1, 2}`
    /// and by adaptive Gauss–Legendre otherwise.
    fn log_measure_integral(&self, q: f64, upper: f64) -> f64 {
        let h2 = self.cell_measure;
        let mut total = 0.0;
        for (k, &b) in self.sorted_abs.iter().enumerate() {
            let s0 = k as f64 * h2;
            if s0 >= upper {
                break;
            }
            let s1 = ((k + 1) as f64 * h2).min(upper);
            if k == 0 {
                total += b.powf(q) * s1.powf(q) / q;
                continue;
            }
            let a = self.cum[k] - s0 * b;
            let ln = (s1 / s0).ln();
            total += if b == 0.0 {
                a.powf(q) * ln
            } else if q == 1.0 {
                a * ln + b * (s1 - s0)
            } else if q == 2.0 {
                a * a * ln + 2.0 * a * b * (s1 - s0) + 0.5 * b * b * (s1 * s1 - s0 * s0)
            } else {
                adaptive_gauss(&|s: f64| (a + b * s).powf(q) / s, s0, s1, SEGMENT_REL_TOL, 0.0)
            };
        }
        total
    }

    /// `(∫₀^{|𝕋²|} M_s^q ds/s)^{1/q}` for `q ∈ [1, 2]`.
    pub fn lorentz_norm(&self, q: f64) -> Result<f64> {
        if !(1.0..=2.0).contains(&q) {
            return Err(Error::Domain(format!("Lorentz exponent q = {q} outside [1, 2]")));
        }
        Ok(self
            .log_measure_integral(q, self.total_measure())
            .powf(1.0 / q))
    }

    /// `∫₀^δ M_s² ds/s`.
    pub fn decay_functional(&self, delta: f64) -> Result<f64> {
        let total = self.total_measure();
        if !(delta > 0.0 && delta <= total * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("δ = {delta} outside (0, {total}]")));
        }
        Ok(self.log_measure_integral(2.0, delta))
    }
}

pub fn maximal_function(p: &RearrangementProfile, s: f64) -> Result<f64> {
    p.maximal_function(s)
}

pub fn lorentz_norm(p: &RearrangementProfile, q: f64) -> Result<f64> {
    p.lorentz_norm(q)
}

pub fn decay_functional(p: &RearrangementProfile, delta: f64) -> Result<f64> {
    p.decay_functional(delta)
}

/// Profile of `s ↦ ∫ M_s(g(τ)) dτ` from profiles at increasing `times`
/// (trapezoid in time, exact in `s` between lattice measures).
pub fn time_integrated(profiles: &[RearrangementProfile], times: &[f64]) -> Result<RearrangementProfile> {
    if profiles.len() != times.len() || profiles.is_empty() {
        return Err(Error::Dimension(format!(
            "{} profiles for {} times",
            profiles.len(),
            times.len()
        )));
    }
    let h2 = profiles[0].cell_measure;
    let len = profiles[0].cum.len();
    if profiles.iter().any(|p| p.cum.len() != len || p.cell_measure != h2) {
        return Err(Error::Dimension("profiles on different grids".into()));
    }
    let mut cum = vec![0.0; len];
    for (w, pw) in times.windows(2).zip(profiles.windows(2)) {
        let dt = w[1] - w[0];
        if dt < 0.0 {
            return Err(Error::Ordering { t0: w[0], t: w[1] });
        }
        for (k, c) in cum.iter_mut().enumerate() {
            *c += 0.5 * dt * (pw[0].cum[k] + pw[1].cum[k]);
        }
    }
    RearrangementProfile::from_cumulative(h2, cum)
}

/// `∫₀^δ |∫₀^T M_s(g(τ)) dτ|² ds/s` for forcing profiles sampled at `times`.
pub fn forcing_decay_functional(profiles: &[RearrangementProfile], times: &[f64], delta: f64) -> Result<f64> {
    time_integrated(profiles, times)?.decay_functional(delta)
}

/// Luxemburg norm `inf{λ > 0 : h² Σ (|f|/λ)(log⁺(|f|/λ))^α ≤ 1}` by bisection.
pub fn llogl_norm(f: &SpectralField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("Orlicz exponent α = {alpha} must be positive")));
    }
    Ok(llogl_norm_of_values(f.values(), f.grid().cell_measure(), alpha))
}

/// Orlicz modular `h² Σ (|f|/λ)(log⁺(|f|/λ))^α`.
pub fn orlicz_modular(values: &[f64], cell_measure: f64, alpha: f64, lambda: f64) -> f64 {
    cell_measure
        * values
            .iter()
            .map(|v| {
                let r = v.abs() / lambda;
                if r > 1.0 {
                    r * r.ln().powf(alpha)
                } else {
                    0.0
                }
            })
            .sum::<f64>()
}

pub fn llogl_norm_of_values(values: &[f64], cell_measure: f64, alpha: f64) -> f64 {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    // the modular vanishes for λ ≥ max|f|, so hi is always feasible
    let mut hi = max;
    let mut lo = 0.5 * max;
    while orlicz_modular(values, cell_measure, alpha, lo) <= 1.0 {
        hi = lo;
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return hi;
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if orlicz_modular(values, cell_measure, alpha, mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `count` logarithmically spaced measures in `[h², 4π²]`.
pub fn log_spaced_measures(grid: GridSpec, count: usize) -> Vec<f64> {
    let (lo, hi) = (grid.cell_measure(), grid.len() as f64 * grid.cell_measure());
    if count == 1 {
        return vec![hi];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            if i + 1 == count {
                hi
            } else {
                lo * (hi / lo).powf(t)
            }
        })
        .collect()
}

/// Largest `M_s(ω(t)) − M_s(ω₀) − ∫₀^t M_s(g(τ)) dτ` over the trajectory
/// times and `s_samples`. Steady forcings integrate exactly; otherwise the
/// time integral uses 4-point Gauss–Legendre on each snapshot interval.
pub fn apriori_bound_check(
    trajectory: &[TrajectorySample],
    forcing: &dyn Forcing,
    s_samples: &[f64],
) -> Result<f64> {
    let first = trajectory.first().ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    let grid = first.omega.grid();
    let m = |p: &RearrangementProfile| -> Result<Vec<f64>> {
        s_samples.iter().map(|&s| p.maximal_function(s)).collect()
    };
    let m0 = m(&profile(&first.omega))?;
    let g_rate = |t: f64| -> Result<Vec<f64>> { m(&profile(&forcing.vorticity_field(grid, t))) };
    let steady = if forcing.is_zero() {
        Some(vec![0.0; s_samples.len()])
    } else if forcing.is_steady() {
        Some(g_rate(first.t)?)
    } else {
        None
    };
    let mut forced = vec![0.0; s_samples.len()];
    let mut worst = f64::NEG_INFINITY;
    let mut prev_t = first.t;
    for sample in trajectory {
        if sample.t < prev_t {
            return Err(Error::Ordering { t0: prev_t, t: sample.t });
        }
        match &steady {
            Some(rate) => {
                for (f, r) in forced.iter_mut().zip(rate) {
                    *f = (sample.t - first.t) * r;
                }
            }
            None if sample.t > prev_t => {
                for (tau, w) in gauss_legendre_4(prev_t, sample.t) {
                    for (f, r) in forced.iter_mut().zip(g_rate(tau)?) {
                        *f += w * r;
                    }
                }
            }
            None => {}
        }
        prev_t = sample.t;
        for ((mt, m0), f) in m(&profile(&sample.omega))?.iter().zip(&m0).zip(&forced) {
            worst = worst.max(mt - m0 - f);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn random_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    #[test]
    fn constant_field_profile() {
        let g = grid(8);
        let f = SpectralField::from_fn(g, |_, _| -3.0);
        let p = profile(&f);
        assert!(p.sorted_abs().iter().all(|v| (v - 3.0).abs() < 1e-12));
        for k in [0usize, 1, 17, 64] {
            let want = 3.0 * k as f64 * g.cell_measure();
            assert!((p.cum()[k] - want).abs() < 1e-12 * want.max(1.0));
        }
        let s = 2.5;
        assert!((p.maximal_function(s).unwrap() - 3.0 * s).abs() < 1e-12);
        assert!(p.maximal_function(-1.0).is_err());
        assert!(p.maximal_function(100.0).is_err());
    }

    #[test]
    fn indicator_maximal_function() {
        let g = grid(8);
        let h2 = g.cell_measure();
        let mut values = vec![0.0; 64];
        for i in [3, 9, 40, 41, 63] {
            values[i] = 1.5;
        }
        let p = profile_of_values(&values, h2);
        assert_eq!(&p.sorted_abs()[..6], &[1.5, 1.5, 1.5, 1.5, 1.5, 0.0]);
        let a = 5.0 * h2;
        for s in [0.0, 0.3 * h2, 2.0 * h2, a, 3.0, 4.0 * core::f64::consts::PI.powi(2)] {
            let want = 1.5 * s.min(a);
            assert!((p.maximal_function(s).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lorentz_norm_of_constant() {
        let g = grid(16);
        let c = 0.7;
        let p = profile(&SpectralField::from_fn(g, |_, _| c));
        let total = 4.0 * core::f64::consts::PI.powi(2);
        for q in [1.0, 1.25, 1.5, 2.0] {
            let want = c * total * q.powf(-1.0 / q);
            assert!((p.lorentz_norm(q).unwrap() - want).abs() < 1e-8 * want);
        }
        assert!(p.lorentz_norm(2.5).is_err());
        assert_eq!(profile(&SpectralField::zeros(g)).lorentz_norm(1.5).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_segments_agree_with_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values = random_values(&mut rng, 64);
        let p = profile_of_values(&values, grid(8).cell_measure());
        for q in [1.0, 2.0] {
            let closed = p.log_measure_integral(q, p.total_measure());
            let mut quad = 0.0;
            for k in 0..64 {
                let (s0, s1) = (k as f64 * p.cell_measure, (k + 1) as f64 * p.cell_measure);
                quad += adaptive_gauss(
                    &|s: f64| p.maximal_function(s).unwrap().powf(q) / s,
                    s0.max(1e-300),
                    s1,
                    1e-13,
                    0.0,
                );
            }
            assert!((closed - quad).abs() < 1e-10 * closed, "q={q}");
        }
    }

    #[test]
    fn decay_functional_of_unit_field() {
        let g = grid(16);
        let p = profile(&SpectralField::from_fn(g, |_, _| 1.0));
        let mut last = 0.0;
        for delta in [1e-3, 0.1, 1.0, 7.0, 39.0] {
            let v = p.decay_functional(delta).unwrap();
            assert!((v - 0.5 * delta * delta).abs() < 1e-9 * delta.max(1.0));
            assert!(v >= last);
            last = v;
        }
        assert!(p.decay_functional(0.0).is_err());
    }

    #[test]
    fn forcing_variant_integrates_in_time() {
        let g = grid(8);
        let p = profile(&SpectralField::from_fn(g, |x, _| x.sin()));
        let steady = forcing_decay_functional(&[p.clone(), p.clone(), p.clone()], &[0.0, 0.5, 2.0], 3.0).unwrap();
        let scaled = profile_of_values(
            &p.sorted_abs().iter().map(|v| 2.0 * v).collect::<Vec<_>>(),
            g.cell_measure(),
        );
        assert!((steady - scaled.decay_functional(3.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn llogl_degenerate_indicator() {
        let g = grid(8);
        let h2 = g.cell_measure();
        let (c, cells) = (5.0, 3usize);
        let mut values = vec![0.0; 64];
        values[..cells].fill(c);
        let lambda = llogl_norm_of_values(&values, h2, 1.0);
        // a (c/λ) ln(c/λ) = 1 with a = 3 h²
        let a = cells as f64 * h2;
        let r = c / lambda;
        assert!((a * r * r.ln() - 1.0).abs() < 1e-10);
        assert_eq!(llogl_norm(&SpectralField::zeros(g), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn log_spaced_endpoints() {
        let g = grid(16);
        let s = log_spaced_measures(g, 32);
        assert_eq!(s.len(), 32);
        assert!((s[0] - g.cell_measure()).abs() < 1e-15);
        assert_eq!(s[31], 256.0 * g.cell_measure());
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn profile_invariants(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = grid(8);
            let values = random_values(&mut rng, 64);
            let p = profile_of_values(&values, g.cell_measure());
            prop_assert!(p.sorted_abs().windows(2).all(|w| w[0] >= w[1]));
            let c = p.cum();
            prop_assert!(c.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(c.windows(3).all(|w| w[1] - w[0] >= w[2] - w[1] - 1e-15));
            let l1: f64 = values.iter().map(|v| v.abs()).sum::<f64>() * g.cell_measure();
            prop_assert!((p.l1_norm() - l1).abs() < 1e-12 * l1.max(1.0));
            let mut shuffled = values.clone();
            shuffled.reverse();
            shuffled.swap(3, 50);
            let q = profile_of_values(&shuffled, g.cell_measure());
            prop_assert_eq!(q.sorted_abs(), p.sorted_abs());
        }

        #[test]
        fn subadditive_and_lipschitz(seed in 0u64..10_000, s in 0.0f64..39.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h2 = grid(8).cell_measure();
            let f = random_values(&mut rng, 64);
            let g = random_values(&mut rng, 64);
            let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
            let diff_l1: f64 = f.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum::<f64>() * h2;
            let (pf, pg, ps) = (profile_of_values(&f, h2), profile_of_values(&g, h2), profile_of_values(&sum, h2));
            let (mf, mg) = (pf.maximal_function(s).unwrap(), pg.maximal_function(s).unwrap());
            prop_assert!(ps.maximal_function(s).unwrap() <= mf + mg + 1e-12);
            prop_assert!((mf - mg).abs() <= diff_l1 + 1e-12);
        }

        #[test]
        fn llogl_is_monotone(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h2 = grid(8).cell_measure();
            let f = random_values(&mut rng, 64);
            let g: Vec<f64> = f.iter().map(|v| v * rng.gen_range(1.0..1.5)).collect();
            let nf = llogl_norm_of_values(&f, h2, 1.0);
            let ng = llogl_norm_of_values(&g, h2, 1.0);
            prop_assert!(nf <= ng + 1e-10);
            prop_assert!((llogl_norm_of_values(&g, h2, 1.0) - ng).abs() == 0.0);
        }
    }
}
