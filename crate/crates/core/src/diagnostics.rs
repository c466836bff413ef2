//! Probes of energy balance, dissipation, decay estimates, structure
//! functions, convergence between runs and weak pairings, plus the sweep
//! verdict built from them.
//!
//! Verdict thresholds (dissipation decrease factor, Cauchy factor) are test
//! budgets, not constants of the underlying theory.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Float supplies libm-backed math without std; with std linked it is shadowed.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::field::{spectral, InnerProduct, SpectralField, VelocityField};
use crate::grid::GridSpec;
use crate::quadrature::{cumulative_trapezoid, trapezoid};
use crate::solver::{RunLedger, TrajectorySample};
use crate::Complex;

/// Per-halving factor by which `ζ_ν(T)` must drop for the sweep to count as
/// non-anomalous.
pub const DISSIPATION_DECREASE: f64 = 1.5;

/// Per-halving contraction required of successive pairwise gaps.
pub const CAUCHY_FACTOR: f64 = 0.7;

/// `½‖u(t)‖² − ½‖u₀‖² − ∫₀^t ⟨f, u⟩`.
pub fn balance_residual(ledger: &RunLedger, u0_norm: f64) -> Vec<f64> {
    ledger
        .energy
        .iter()
        .zip(&ledger.work_cum)
        .map(|(e, w)| e - 0.5 * u0_norm * u0_norm - w)
        .collect()
}

/// `ζ_ν(t) = ν ∫₀^t ‖ω‖²`.
pub fn zeta(ledger: &RunLedger) -> Result<Vec<f64>> {
    if !(ledger.nu > 0.0) {
        return Err(Error::Domain(format!("ζ needs ν > 0, got {}", ledger.nu)));
    }
    let rate: Vec<f64> = ledger.enstrophy.iter().map(|z| ledger.nu * z).collect();
    Ok(cumulative_trapezoid(&ledger.times, &rate))
}

/// `min_t [(‖u₀‖² + √t M) e^{√t M} − ‖u(t)‖²]` with `M = ‖f‖_{L²_t L²_x}`.
pub fn gronwall_probe(ledger: &RunLedger, f_l2t_l2x: f64) -> f64 {
    let u0_sq = 2.0 * ledger.energy.first().copied().unwrap_or(0.0);
    ledger
        .times
        .iter()
        .zip(&ledger.energy)
        .map(|(t, e)| {
            let a = t.sqrt() * f_l2t_l2x;
            (u0_sq + a) * a.exp() - 2.0 * e
        })
        .fold(f64::INFINITY, f64::min)
}

/// `min_{τ<t} [‖ω(τ)‖² + ν⁻¹∫_τ^t ‖f‖² − ‖ω(t)‖²]`, with `‖f(t)‖²` sampled
/// at the ledger times.
pub fn enstrophy_slack(ledger: &RunLedger, forcing_sq: &[f64]) -> Result<f64> {
    if forcing_sq.len() != ledger.len() {
        return Err(Error::Dimension(format!(
            "{} forcing samples for {} ledger times",
            forcing_sq.len(),
            ledger.len()
        )));
    }
    if !(ledger.nu > 0.0) {
        return Err(Error::Domain("enstrophy inequality needs ν > 0".into()));
    }
    let cum = cumulative_trapezoid(&ledger.times, forcing_sq);
    let z = &ledger.enstrophy;
    let mut worst = f64::INFINITY;
    // ‖ω(t)‖² − F(t)/ν ≤ ‖ω(τ)‖² − F(τ)/ν: track the running minimum over τ
    let mut best_prefix = f64::INFINITY;
    for t in 0..z.len() {
        if t > 0 {
            worst = worst.min(best_prefix - (z[t] - cum[t] / ledger.nu));
        }
        best_prefix = best_prefix.min(z[t] - cum[t] / ledger.nu);
    }
    Ok(worst)
}

/// Sweep over decreasing viscosities sharing snapshot times.
#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub nus: Vec<f64>,
    pub ledgers: Vec<RunLedger>,
    pub trajectories: Vec<Vec<TrajectorySample>>,
}

impl SweepResult {
    pub fn validate(&self) -> Result<()> {
        if self.ledgers.len() != self.nus.len() || self.trajectories.len() != self.nus.len() {
            return Err(Error::Dimension("sweep members disagree in count".into()));
        }
        if self.nus.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Configuration("viscosities must be strictly decreasing".into()));
        }
        Ok(())
    }
}

/// `sup_t √(νt) ‖ω^ν(t)‖` per viscous member; `ν = 0` members are excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub per_nu: Vec<(f64, f64)>,
    pub excluded: Vec<f64>,
    /// `max / min` over the included viscosities.
    pub ratio: Option<f64>,
}

pub fn vorticity_decay_probe(ledgers: &[RunLedger]) -> DecayProbe {
    let mut per_nu = Vec::new();
    let mut excluded = Vec::new();
    for ledger in ledgers {
        if !(ledger.nu > 0.0) {
            excluded.push(ledger.nu);
            continue;
        }
        let sup = ledger
            .times
            .iter()
            .zip(&ledger.enstrophy)
            .map(|(t, z)| (ledger.nu * t * z).sqrt())
            .fold(0.0, f64::max);
        per_nu.push((ledger.nu, sup));
    }
    let max = per_nu.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min = per_nu.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ratio = (!per_nu.is_empty() && min > 0.0).then(|| max / min);
    DecayProbe {
        per_nu,
        excluded,
        ratio,
    }
}

/// Lattice offsets `(i, j)` with `|(ih, jh)| ≤ r`, zero offset included.
pub fn offsets_within(grid: GridSpec, r: f64) -> Vec<(i64, i64)> {
    let h = grid.h();
    let m = (r / h).floor() as i64;
    let half = (grid.n() / 2) as i64;
    let mut out = Vec::new();
    for j in -m.min(half)..=m.min(half - 1) {
        for i in -m.min(half)..=m.min(half - 1) {
            let d2 = ((i * i + j * j) as f64) * h * h;
            if d2 <= r * r * (1.0 + 1e-12) {
                out.push((i, j));
            }
        }
    }
    out
}

/// `S₂(v; r) = (⨍_{|δ| ≤ r} ‖v(·+δ) − v‖² dδ)^{1/2}` over lattice offsets,
/// using the spectral autocorrelation `A(δ) = 4π² Σ |v̂(k)|² cos(k·δ)`.
pub fn structure_function(v: &VelocityField, r: f64) -> Result<f64> {
    let grid = v.grid();
    if !(r >= grid.h() && r <= core::f64::consts::PI) {
        return Err(Error::Domain(format!(
            "radius r = {r} outside [h, π] with h = {}",
            grid.h()
        )));
    }
    let power: Vec<Complex> = v
        .ux
        .coeffs()
        .iter()
        .zip(v.uy.coeffs())
        .map(|(a, b)| Complex::new(GridSpec::DOMAIN_MEASURE * (a.norm_sqr() + b.norm_sqr()), 0.0))
        .collect();
    let autocorr = Fft2d::new(grid.n()).values_of(&power);
    let n = grid.n() as i64;
    let offsets = offsets_within(grid, r);
    let a0 = autocorr[0];
    let sum: f64 = offsets
        .iter()
        .map(|&(i, j)| {
            let idx = grid.flat(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize);
            2.0 * (a0 - autocorr[idx])
        })
        .sum();
    Ok((sum / offsets.len() as f64).max(0.0).sqrt())
}

/// `(∫₀^T S₂(u(t); r)² dt)^{1/2}` over the snapshot times.
pub fn s2_time(trajectory: &[TrajectorySample], r: f64) -> Result<f64> {
    let mut times = Vec::with_capacity(trajectory.len());
    let mut sq = Vec::with_capacity(trajectory.len());
    for s in trajectory {
        times.push(s.t);
        sq.push(structure_function(&s.velocity(), r)?.powi(2));
    }
    Ok(trapezoid(&times, &sq).sqrt())
}

/// Terms of `‖ω‖ ≤ C (r‖∇ω‖ + 2 S₂(u; r)/r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationProbe {
    pub omega_l2: f64,
    pub r_grad_omega: f64,
    pub s2_over_r: f64,
    /// `‖ω‖ / (r‖∇ω‖ + 2S₂/r)`, absent when the denominator vanishes.
    pub ratio: Option<f64>,
}

pub fn interpolation_probe(u: &VelocityField, omega: &SpectralField, r: f64) -> Result<InterpolationProbe> {
    let curl = u.curl();
    let mismatch = (&curl - omega).max_abs();
    if mismatch > 1e-8 * omega.max_abs().max(1.0) {
        return Err(Error::Consistency(format!("curl u differs from ω by {mismatch:e}")));
    }
    let omega_l2 = omega.l2_norm();
    let r_grad_omega = r * omega.gradient().l2_norm();
    let s2_over_r = structure_function(u, r)? / r;
    let denom = r_grad_omega + 2.0 * s2_over_r;
    Ok(InterpolationProbe {
        omega_l2,
        r_grad_omega,
        s2_over_r,
        ratio: (denom > 0.0).then(|| omega_l2 / denom),
    })
}

fn velocity_distance_sq(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    let (ga, gb) = (a.grid(), b.grid());
    let coarse = if ga.n() <= gb.n() { ga } else { gb };
    let a = a.truncate_to(coarse)?;
    let b = b.truncate_to(coarse)?;
    let diff: Vec<Complex> = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - y).collect();
    Ok(2.0 * spectral::energy_of_vorticity(coarse, &diff))
}

/// `(‖u_a − u_b‖_{L²_t L²_x}, ‖u_a − u_b‖_{C_t L²_x})` over the common
/// snapshot times, after restricting both to the coarser grid.
pub fn convergence_metrics(run_a: &[TrajectorySample], run_b: &[TrajectorySample]) -> Result<(f64, f64)> {
    let scale = run_a
        .iter()
        .chain(run_b)
        .map(|s| s.t.abs())
        .fold(1.0, f64::max);
    let mut times = Vec::new();
    let mut dist_sq = Vec::new();
    let mut j = 0;
    for a in run_a {
        while j < run_b.len() && run_b[j].t < a.t - 1e-9 * scale {
            j += 1;
        }
        if j < run_b.len() && (run_b[j].t - a.t).abs() <= 1e-9 * scale {
            times.push(a.t);
            dist_sq.push(velocity_distance_sq(&a.omega, &run_b[j].omega)?);
        }
    }
    if times.is_empty() {
        return Err(Error::Resample("trajectories share no sample times".into()));
    }
    let l2 = trapezoid(&times, &dist_sq).max(0.0).sqrt();
    let ct = dist_sq.iter().fold(0.0f64, |m, d| m.max(*d)).sqrt();
    Ok((l2, ct))
}

/// `‖u‖_{L²_t L²_x}` of a trajectory.
pub fn l2t_l2x_norm(trajectory: &[TrajectorySample]) -> f64 {
    let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
    let sq: Vec<f64> = trajectory
        .iter()
        .map(|s| 2.0 * spectral::energy_of_vorticity(s.omega.grid(), s.omega.coeffs()))
        .collect();
    trapezoid(&times, &sq).sqrt()
}

/// Number of members of [`test_family`].
pub const TEST_FAMILY_SIZE: usize = 9;

/// Divergence-free test fields `∇⊥ψ_j`: the eight lowest Fourier modes
/// (`cos` and `sin` of `k·x` for `k ∈ {(1,0), (0,1), (1,1), (1,−1)}`) and a
/// smooth radial bump supported in `|x| < 1` around the origin.
pub fn test_family(grid: GridSpec) -> Vec<VelocityField> {
    let mut out = Vec::with_capacity(TEST_FAMILY_SIZE);
    for (kx, ky) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)] {
        // ∇⊥ cos(k·x) = −sin(k·x)(−k_y, k_x), ∇⊥ sin(k·x) = cos(k·x)(−k_y, k_x)
        let c = VelocityField {
            ux: SpectralField::from_fn(grid, |x, y| ky * (kx * x + ky * y).sin()),
            uy: SpectralField::from_fn(grid, |x, y| -kx * (kx * x + ky * y).sin()),
        };
        let s = VelocityField {
            ux: SpectralField::from_fn(grid, |x, y| -ky * (kx * x + ky * y).cos()),
            uy: SpectralField::from_fn(grid, |x, y| kx * (kx * x + ky * y).cos()),
        };
        out.push(c);
        out.push(s);
    }
    // ∇⊥ of the stream function χ = exp(1 − 1/(1 − ρ²)) on ρ < 1, taken
    // spectrally so the field is exactly divergence-free on the grid
    let n = grid.n();
    let mut chi = Vec::with_capacity(grid.len());
    for iy in 0..n {
        let y = grid.centered_coord(iy);
        for ix in 0..n {
            let x = grid.centered_coord(ix);
            let w = 1.0 - (x * x + y * y);
            chi.push(if w > 0.0 { (1.0 - 1.0 / w).exp() } else { 0.0 });
        }
    }
    let grad = SpectralField::from_values(grid, chi).gradient();
    out.push(VelocityField {
        ux: grad.uy.scaled(-1.0),
        uy: grad.ux,
    });
    out
}

/// `∫ ⟨v(t), ψ_j⟩ dt` (trapezoid over the series times) for each test field.
/// A single-sample series yields the instantaneous pairings.
pub fn weak_pairing_probe<F: InnerProduct>(series: &[(f64, F)], tests: &[F]) -> Result<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(series.len());
    for (_, v) in series {
        rows.push(tests.iter().map(|psi| v.inner(psi)).collect::<Result<_>>()?);
    }
    if series.len() == 1 {
        return Ok(rows.pop().unwrap_or_default());
    }
    let times: Vec<f64> = series.iter().map(|(t, _)| *t).collect();
    Ok((0..tests.len())
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            trapezoid(&times, &col)
        })
        .collect())
}

/// How the sweep's forcing is expected to behave as `ν → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingMode {
    /// Forcing fixed in `ν`; a strong limit is expected.
    StrongLimit,
    /// Forcing oscillating with `ν`; the weak limit is zero.
    WeakOscillatory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFlags {
    pub anomalous_dissipation: bool,
    pub strong_convergence: bool,
    pub residual_vanishing: bool,
    /// `strong_convergence ⟺ residual_vanishing`, checked in the strong mode.
    pub equivalence_consistent: Option<bool>,
    /// Balance residual of the weak limit `u ≡ 0`, in the oscillatory mode.
    pub limit_balance_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub nus: Vec<f64>,
    #[serde(rename = "zeta_T")]
    pub zeta_t: Vec<f64>,
    /// Distances between consecutive members.
    pub l2l2_gaps: Vec<f64>,
    pub ctl2_gaps: Vec<f64>,
    /// `½‖u(T)‖² − ½‖u₀‖² − ∫₀^T ⟨f, u⟩` per member.
    pub balance_residual_final: Vec<f64>,
    /// Present only with at least three viscosities.
    pub flags: Option<VerdictFlags>,
}

fn halvings(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

/// Numbers of the report; flags are filled only when three or more
/// viscosities are present.
pub fn balance_report(sweep: &SweepResult, mode: ForcingMode) -> Result<BalanceReport> {
    sweep.validate()?;
    if sweep.nus.is_empty() {
        return Err(Error::Configuration("empty sweep".into()));
    }
    let mut zeta_t = Vec::with_capacity(sweep.nus.len());
    let mut balance_residual_final = Vec::with_capacity(sweep.nus.len());
    for ledger in &sweep.ledgers {
        zeta_t.push(if ledger.nu > 0.0 {
            zeta(ledger)?.last().copied().unwrap_or(0.0)
        } else {
            0.0
        });
        let u0 = (2.0 * ledger.energy.first().copied().unwrap_or(0.0)).sqrt();
        balance_residual_final.push(balance_residual(ledger, u0).last().copied().unwrap_or(0.0));
    }
    let mut l2l2_gaps = Vec::new();
    let mut ctl2_gaps = Vec::new();
    for w in sweep.trajectories.windows(2) {
        let (l2, ct) = convergence_metrics(&w[0], &w[1])?;
        l2l2_gaps.push(l2);
        ctl2_gaps.push(ct);
    }
    let flags = (sweep.nus.len() >= 3).then(|| {
        let nus = &sweep.nus;
        let decreasing = (0..nus.len() - 1).all(|i| {
            let need = DISSIPATION_DECREASE.powf(halvings(nus[i], nus[i + 1]));
            zeta_t[i] >= need * zeta_t[i + 1]
        });
        let cauchy = (0..l2l2_gaps.len() - 1).all(|i| {
            let factor = CAUCHY_FACTOR.powf(halvings(nus[i + 1], nus[i + 2]));
            l2l2_gaps[i + 1] <= factor * l2l2_gaps[i]
        });
        let residual_vanishing = balance_residual_final
            .windows(2)
            .all(|w| w[1].abs() < w[0].abs() || w[1].abs() <= 1e-12);
        let (equivalence_consistent, limit_balance_residual) = match mode {
            ForcingMode::StrongLimit => (Some(cauchy == residual_vanishing), None),
            ForcingMode::WeakOscillatory => {
                let zero = RunLedger::from_samples(0.0, vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 2], &[0.0; 2]);
                (None, balance_residual(&zero, 0.0).last().copied())
            }
        };
        VerdictFlags {
            anomalous_dissipation: !decreasing,
            strong_convergence: cauchy,
            residual_vanishing,
            equivalence_consistent,
            limit_balance_residual,
        }
    });
    Ok(BalanceReport {
        nus: sweep.nus.clone(),
        zeta_t,
        l2l2_gaps,
        ctl2_gaps,
        balance_residual_final,
        flags,
    })
}

/// [`balance_report`] requiring at least three viscosities.
pub fn theorem_verdict(sweep: &SweepResult, mode: ForcingMode) -> Result<BalanceReport> {
    if sweep.nus.len() < 3 {
        return Err(Error::Configuration(format!(
            "verdict needs at least 3 viscosities, got {}",
            sweep.nus.len()
        )));
    }
    balance_report(sweep, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{random_smooth_field, taylor_green, taylor_green_energy};
    use core::f64::consts::PI;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn tg_ledger(nu: f64, steps: usize) -> RunLedger {
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        let energy = times.iter().map(|t| taylor_green_energy(nu, *t)).collect();
        let enstrophy = times.iter().map(|t| 4.0 * PI * PI * (-4.0 * nu * t).exp()).collect();
        let power = vec![0.0; times.len()];
        RunLedger::from_samples(nu, times, energy, enstrophy, &power)
    }

    fn tg_trajectory(g: GridSpec, nu: f64, steps: usize) -> Vec<TrajectorySample> {
        (0..=steps)
            .map(|i| {
                let t = i as f64 / steps as f64;
                TrajectorySample::new(t, taylor_green(g, nu, t).vorticity)
            })
            .collect()
    }

    #[test]
    fn taylor_green_balance_and_zeta() {
        let nu = 0.01;
        let ledger = tg_ledger(nu, 1000);
        let r = balance_residual(&ledger, (2.0 * PI * PI).sqrt());
        let z = zeta(&ledger).unwrap();
        for (i, t) in ledger.times.iter().enumerate() {
            let closed = PI * PI * (1.0 - (-4.0 * nu * t).exp());
            assert!((r[i] + closed).abs() < 1e-6);
            assert!((z[i] - closed).abs() < 1e-6);
            let identity = r[i] + ledger.dissipation_cum[i];
            assert!((identity - ledger.identity_residual[i]).abs() < 1e-14);
        }
        assert!(z.windows(2).all(|w| w[1] >= w[0]));
        let mut euler = tg_ledger(0.0, 10);
        assert!(zeta(&euler).is_err());
        euler.nu = 0.0;
        assert!(balance_residual(&euler, (2.0 * PI * PI).sqrt()).iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn gronwall_and_enstrophy_slack() {
        let ledger = tg_ledger(0.05, 50);
        assert!(gronwall_probe(&ledger, 0.0) >= -1e-12);
        // the slack vanishes at t = 0 and grows with the forcing budget
        assert!(gronwall_probe(&ledger, 0.3).abs() < 1e-12);
        let zero = RunLedger::from_samples(0.1, vec![0.0, 1.0], vec![0.0; 2], vec![0.0; 2], &[0.0; 2]);
        assert_eq!(gronwall_probe(&zero, 0.0), 0.0);
        assert!(enstrophy_slack(&ledger, &vec![0.0; 51]).unwrap() >= 0.0);
        assert!(enstrophy_slack(&ledger, &[0.0]).is_err());
    }

    #[test]
    fn decay_probe_excludes_inviscid_members() {
        let ledgers = [tg_ledger(0.01, 20), tg_ledger(0.0, 20), tg_ledger(0.02, 20)];
        let probe = vorticity_decay_probe(&ledgers);
        assert_eq!(probe.excluded, vec![0.0]);
        assert_eq!(probe.per_nu.len(), 2);
        // sup_t √(νt)·2π e^{-2νt} is attained at t = 1 for these ν
        let want = |nu: f64| nu.sqrt() * 2.0 * PI * (-2.0 * nu).exp();
        assert!((probe.per_nu[0].1 - want(0.01)).abs() < 1e-12);
        assert!(probe.ratio.unwrap() > 1.0);
    }

    fn brute_s2(v: &VelocityField, r: f64) -> f64 {
        let g = v.grid();
        let n = g.n();
        let offsets = offsets_within(g, r);
        let mut total = 0.0;
        for &(i, j) in &offsets {
            let mut s = 0.0;
            for iy in 0..n {
                for ix in 0..n {
                    let sx = (ix as i64 + i).rem_euclid(n as i64) as usize;
                    let sy = (iy as i64 + j).rem_euclid(n as i64) as usize;
                    let (a, b) = (g.flat(ix, iy), g.flat(sx, sy));
                    s += (v.ux.values()[b] - v.ux.values()[a]).powi(2) + (v.uy.values()[b] - v.uy.values()[a]).powi(2);
                }
            }
            total += s * g.cell_measure();
        }
        (total / offsets.len() as f64).sqrt()
    }

    #[test]
    fn structure_function_matches_double_loop() {
        let g = grid(16);
        let sin = VelocityField {
            ux: SpectralField::from_fn(g, |x, _| x.sin()),
            uy: SpectralField::zeros(g),
        };
        for r in [g.h(), 2.0 * g.h(), 1.0, 3.0] {
            let s = structure_function(&sin, r).unwrap();
            assert!((s - brute_s2(&sin, r)).abs() < 1e-12);
        }
        let w = random_smooth_field(g, 3, 1.0, 5.0).unwrap();
        let u = crate::field::biot_savart(&w).unwrap();
        assert!((structure_function(&u, 0.9).unwrap() - brute_s2(&u, 0.9)).abs() < 1e-12);
        assert!(structure_function(&u, 0.5 * g.h()).is_err());
        let constant = VelocityField {
            ux: SpectralField::from_fn(g, |_, _| 2.0),
            uy: SpectralField::zeros(g),
        };
        assert!(structure_function(&constant, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn interpolation_probe_terms() {
        let g = grid(32);
        let u = VelocityField {
            ux: SpectralField::zeros(g),
            uy: SpectralField::from_fn(g, |x, _| -x.cos()),
        };
        let w = SpectralField::from_fn(g, |x, _| x.sin());
        let p = interpolation_probe(&u, &w, 0.5).unwrap();
        assert!((p.omega_l2 - (2.0 * PI * PI).sqrt()).abs() < 1e-10);
        assert!((p.r_grad_omega - 0.5 * (2.0 * PI * PI).sqrt()).abs() < 1e-10);
        assert!(p.ratio.unwrap().is_finite());
        let zero = interpolation_probe(&VelocityField::zeros(g), &SpectralField::zeros(g), 0.5).unwrap();
        assert_eq!((zero.omega_l2, zero.r_grad_omega, zero.s2_over_r, zero.ratio), (0.0, 0.0, 0.0, None));
        assert!(matches!(interpolation_probe(&u, &w.scaled(2.0), 0.5), Err(Error::Consistency(_))));
    }

    #[test]
    fn taylor_green_distance_closed_form() {
        let g = grid(16);
        let nu = 0.05;
        let a = tg_trajectory(g, nu, 40);
        let b = tg_trajectory(g, nu / 2.0, 40);
        let (l2, ct) = convergence_metrics(&a, &b).unwrap();
        let want = (0..=40)
            .map(|i| {
                let t = i as f64 / 40.0;
                ((-2.0 * nu * t).exp() - (-nu * t).exp()).abs()
            })
            .fold(0.0, f64::max)
            * PI
            * 2f64.sqrt();
        assert!((ct - want).abs() < 1e-6);
        assert!(l2 > 0.0 && l2 < ct);
        assert_eq!(convergence_metrics(&a, &a).unwrap(), (0.0, 0.0));
        let fine = tg_trajectory(grid(32), nu, 40);
        let (l2f, _) = convergence_metrics(&fine, &b).unwrap();
        assert!((l2f - l2).abs() < 1e-10);
        assert!(matches!(convergence_metrics(&tg_trajectory(grid(12), nu, 40), &b), Err(Error::Resample(_))));
    }

    #[test]
    fn metric_triangle_inequality() {
        let g = grid(16);
        let runs: Vec<_> = [0.1, 0.05, 0.02].iter().map(|nu| tg_trajectory(g, *nu, 10)).collect();
        let d = |i: usize, j: usize| convergence_metrics(&runs[i], &runs[j]).unwrap();
        for k in 0..2 {
            let pick = |x: (f64, f64)| if k == 0 { x.0 } else { x.1 };
            assert!(pick(d(0, 2)) <= pick(d(0, 1)) + pick(d(1, 2)) + 1e-10);
            assert!((pick(d(0, 1)) - pick(d(1, 0))).abs() < 1e-14);
        }
    }

    #[test]
    fn fourier_tests_are_orthogonal() {
        let g = grid(16);
        let tests = test_family(g);
        assert_eq!(tests.len(), TEST_FAMILY_SIZE);
        for (i, psi) in tests.iter().enumerate().take(8) {
            let row = weak_pairing_probe(&[(0.0, psi.clone())], &tests[..8]).unwrap();
            for (j, v) in row.iter().enumerate() {
                if i == j {
                    assert!(*v > 1.0);
                } else {
                    assert!(v.abs() < 1e-10);
                }
            }
        }
        for psi in &tests {
            assert!(psi.spectral_divergence() < 1e-8);
        }
        let zero = weak_pairing_probe(&[(0.0, VelocityField::zeros(g)), (1.0, VelocityField::zeros(g))], &tests).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn verdict_needs_three_viscosities() {
        let g = grid(16);
        let nus = [0.04, 0.02];
        let sweep = SweepResult {
            nus: nus.to_vec(),
            ledgers: nus.iter().map(|nu| tg_ledger(*nu, 10)).collect(),
            trajectories: nus.iter().map(|nu| tg_trajectory(g, *nu, 10)).collect(),
        };
        assert!(matches!(theorem_verdict(&sweep, ForcingMode::StrongLimit), Err(Error::Configuration(_))));
        assert!(balance_report(&sweep, ForcingMode::StrongLimit).unwrap().flags.is_none());
    }

    #[test]
    fn taylor_green_sweep_is_strongly_convergent() {
        let g = grid(16);
        let nus = [0.04, 0.02, 0.01];
        let sweep = SweepResult {
            nus: nus.to_vec(),
            ledgers: nus.iter().map(|nu| tg_ledger(*nu, 200)).collect(),
            trajectories: nus.iter().map(|nu| tg_trajectory(g, *nu, 200)).collect(),
        };
        let report = theorem_verdict(&sweep, ForcingMode::StrongLimit).unwrap();
        let flags = report.flags.unwrap();
        assert!(flags.strong_convergence);
        assert!(!flags.anomalous_dissipation);
        assert!(flags.residual_vanishing);
        assert_eq!(flags.equivalence_consistent, Some(true));
        for (z, nu) in report.zeta_t.iter().zip(nus) {
            assert!((z - PI * PI * (1.0 - (-4.0 * nu).exp())).abs() < 1e-6);
        }
        let bad = SweepResult {
            nus: vec![0.01, 0.02, 0.04],
            ..sweep
        };
        assert!(theorem_verdict(&bad, ForcingMode::StrongLimit).is_err());
    }
}
