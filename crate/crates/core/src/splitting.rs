//! First-order operator splitting for `∂t β + U·∇β = νΔβ + g`.
//!
//! On each outer interval `(t_n, t_{n+1}]` the approximant is
//! `β^Δ(t) = H(t; t_n) E(t; t_n) β^Δ(t_n)`, with `E` the transport flow of
//! `U` and `H` the forced heat flow (exact propagator, Duhamel forcing).

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

// Float supplies libm-backed math without std; with std linked it is shadowed.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralField, VelocityField};
use crate::grid::GridSpec;
use crate::quadrature::{gauss_legendre_4, log_log_slope};
use crate::solver::{max_speed, Forcing, IntegratingFactor, Kernel, TrajectorySample, Unforced, CFL_LIMIT};
use crate::Complex;

/// Time-indexed advecting velocity.
pub trait VelocityProvider: Send + Sync {
    fn velocity(&self, grid: GridSpec, t: f64) -> VelocityField;

    /// True when the velocity does not depend on time.
    fn is_steady(&self) -> bool {
        false
    }
}

/// A velocity frozen in time.
#[derive(Debug, Clone)]
pub struct FrozenVelocity(pub VelocityField);

impl VelocityProvider for FrozenVelocity {
    fn velocity(&self, _grid: GridSpec, _t: f64) -> VelocityField {
        self.0.clone()
    }

    fn is_steady(&self) -> bool {
        true
    }
}

/// `U ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroVelocity;

impl VelocityProvider for ZeroVelocity {
    fn velocity(&self, grid: GridSpec, _t: f64) -> VelocityField {
        VelocityField::zeros(grid)
    }

    fn is_steady(&self) -> bool {
        true
    }
}

/// Default number of transport sub-steps per outer step.
pub const INNER_STEPS: usize = 20;

/// Default number of samples per outer step in [`split_run`].
pub const SAMPLES_PER_STEP: usize = 4;

/// Problem and discretization of one splitting run.
#[derive(Clone)]
pub struct SplitConfig {
    pub grid: GridSpec,
    pub nu: f64,
    /// Outer splitting step `Δt`.
    pub dt: f64,
    pub t_final: f64,
    pub velocity: Arc<dyn VelocityProvider>,
    pub forcing: Arc<dyn Forcing>,
    pub beta0: SpectralField,
    /// Transport sub-step; `None` means `Δt / INNER_STEPS`.
    pub inner_dt: Option<f64>,
    /// Samples per outer interval, breakpoints included.
    pub samples_per_step: usize,
}

impl SplitConfig {
    pub fn new(
        beta0: SpectralField,
        nu: f64,
        dt: f64,
        t_final: f64,
        velocity: Arc<dyn VelocityProvider>,
        forcing: Arc<dyn Forcing>,
    ) -> Self {
        Self {
            grid: beta0.grid(),
            nu,
            dt,
            t_final,
            velocity,
            forcing,
            beta0,
            inner_dt: None,
            samples_per_step: SAMPLES_PER_STEP,
        }
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..self.clone() }
    }

    fn steps(&self) -> Result<usize> {
        let ratio = self.t_final / self.dt;
        let steps = ratio.round();
        if !(self.dt > 0.0 && self.t_final > 0.0) || steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio {
            return Err(Error::Configuration(format!(
                "T = {} is not an integral multiple of Δt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }

    fn validate(&self) -> Result<usize> {
        if !(self.nu > 0.0) {
            return Err(Error::Configuration(format!("splitting needs ν > 0, got {}", self.nu)));
        }
        if self.beta0.grid() != self.grid {
            return Err(Error::Dimension("β₀ grid differs from the run grid".into()));
        }
        if self.samples_per_step == 0 {
            return Err(Error::Configuration("samples_per_step must be positive".into()));
        }
        self.beta0.require_zero_mean()?;
        self.forcing.vorticity_field(self.grid, 0.0).require_zero_mean()?;
        self.steps()
    }

    fn inner_dt(&self) -> f64 {
        self.inner_dt.unwrap_or(self.dt / INNER_STEPS as f64)
    }
}

/// `e^{ν(t−t0)Δ} β₀ + ∫_{t0}^t e^{ν(t−τ)Δ} g(τ) dτ`.
///
/// Steady forcings use the closed-form Duhamel integral; otherwise the
/// integral is 4-point Gauss–Legendre on `[t0, t]`.
pub fn heat_step(beta0: &SpectralField, t0: f64, t: f64, nu: f64, g: &dyn Forcing) -> Result<SpectralField> {
    if t < t0 {
        return Err(Error::Ordering { t0, t });
    }
    let grid = beta0.grid();
    let kernel_k_sq: Vec<f64> = (0..grid.len())
        .map(|i| crate::field::spectral::k_sq(grid, i))
        .collect();
    let span = t - t0;
    let mut out: Vec<Complex> = beta0
        .coeffs()
        .iter()
        .zip(&kernel_k_sq)
        .map(|(b, k2)| b * (-nu * k2 * span).exp())
        .collect();
    if !g.is_zero() && span > 0.0 {
        if g.is_steady() {
            let gc = g.curl_coeffs(grid, t0);
            for ((o, gk), k2) in out.iter_mut().zip(&gc).zip(&kernel_k_sq) {
                let rate = nu * k2;
                // ∫₀^span e^{-rate σ} dσ
                let w = if rate == 0.0 { span } else { -(-rate * span).exp_m1() / rate };
                *o += gk * w;
            }
        } else {
            for (tau, w) in gauss_legendre_4(t0, t) {
                let gc = g.curl_coeffs(grid, tau);
                for ((o, gk), k2) in out.iter_mut().zip(&gc).zip(&kernel_k_sq) {
                    *o += gk * (w * (-nu * k2 * (t - tau)).exp());
                }
            }
        }
    }
    Ok(SpectralField::from_coeffs_unchecked(grid, out))
}

struct Transport<'a> {
    kernel: Kernel,
    velocity: &'a dyn VelocityProvider,
    frozen: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> Transport<'a> {
    fn new(grid: GridSpec, velocity: &'a dyn VelocityProvider) -> Self {
        let frozen = velocity.is_steady().then(|| {
            let u = velocity.velocity(grid, 0.0);
            (u.ux.values().to_vec(), u.uy.values().to_vec())
        });
        Self {
            kernel: Kernel::new(grid),
            velocity,
            frozen,
        }
    }

    fn velocity_values(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        match &self.frozen {
            Some((ux, uy)) => (ux.clone(), uy.clone()),
            None => {
                let u = self.velocity.velocity(self.kernel.grid, t);
                (u.ux.values().to_vec(), u.uy.values().to_vec())
            }
        }
    }

    fn rhs(&mut self, beta: &[Complex], t: f64) -> Vec<Complex> {
        let (ux, uy) = self.velocity_values(t);
        self.kernel.advection(&ux, &uy, beta)
    }

    /// RK4 on `∂τ β = −P(U·∇β)` from `t0` to `t` with sub-steps `≤ inner_dt`.
    fn advance(&mut self, beta: &[Complex], t0: f64, t: f64, inner_dt: f64) -> Result<Vec<Complex>> {
        if t < t0 {
            return Err(Error::Ordering { t0, t });
        }
        let mut b = beta.to_vec();
        if t == t0 {
            return Ok(b);
        }
        let subs = ((t - t0) / inner_dt - 1e-9).ceil().max(1.0) as usize;
        let d = (t - t0) / subs as f64;
        let h = self.kernel.grid.h();
        for i in 0..subs {
            let s = t0 + i as f64 * d;
            let (ux, uy) = self.velocity_values(s);
            let umax = max_speed(&ux, &uy);
            if d * umax / h > CFL_LIMIT {
                return Err(Error::StepSize {
                    dt: d,
                    suggested: CFL_LIMIT * h / umax,
                });
            }
            let k1 = self.kernel.advection(&ux, &uy, &b);
            let y2: Vec<Complex> = b.iter().zip(&k1).map(|(y, k)| y + k * (0.5 * d)).collect();
            let k2 = self.rhs(&y2, s + 0.5 * d);
            let y3: Vec<Complex> = b.iter().zip(&k2).map(|(y, k)| y + k * (0.5 * d)).collect();
            let k3 = self.rhs(&y3, s + 0.5 * d);
            let y4: Vec<Complex> = b.iter().zip(&k3).map(|(y, k)| y + k * d).collect();
            let k4 = self.rhs(&y4, s + d);
            for j in 0..b.len() {
                b[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (d / 6.0);
            }
        }
        Ok(b)
    }
}

/// Transport `β₀` along `U` from `t0` to `t` (RK4, sub-step `inner_dt`).
pub fn transport_step(
    beta0: &SpectralField,
    t0: f64,
    t: f64,
    velocity: &dyn VelocityProvider,
    inner_dt: f64,
) -> Result<SpectralField> {
    let mut tr = Transport::new(beta0.grid(), velocity);
    let c = tr.advance(beta0.coeffs(), t0, t, inner_dt)?;
    Ok(SpectralField::from_coeffs_unchecked(beta0.grid(), c))
}

/// Samples of `β^Δ`, `samples_per_step` per outer interval plus `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTrajectory {
    pub dt: f64,
    pub samples_per_step: usize,
    pub samples: Vec<TrajectorySample>,
}

impl SplitTrajectory {
    /// Values at the breakpoints `t_n = nΔt`.
    pub fn breakpoints(&self) -> impl Iterator<Item = &TrajectorySample> {
        self.samples.iter().step_by(self.samples_per_step)
    }

    pub fn last(&self) -> &SpectralField {
        &self.samples.last().expect("trajectory holds β₀").omega
    }
}

/// Runs the splitting recursion over `[0, T]`.
pub fn split_run(config: &SplitConfig) -> Result<SplitTrajectory> {
    let steps = config.validate()?;
    let grid = config.grid;
    let m = config.samples_per_step;
    let inner_dt = config.inner_dt();
    let mut transport = Transport::new(grid, config.velocity.as_ref());
    let mut samples = Vec::with_capacity(steps * m + 1);
    samples.push(TrajectorySample::new(0.0, config.beta0.clone()));
    let mut beta_n = config.beta0.clone();
    for n in 0..steps {
        let t_n = n as f64 * config.dt;
        let mut moved = beta_n.coeffs().to_vec();
        let mut prev = t_n;
        for j in 1..=m {
            let t = if j == m {
                (n + 1) as f64 * config.dt
            } else {
                t_n + j as f64 * config.dt / m as f64
            };
            moved = transport.advance(&moved, prev, t, inner_dt)?;
            prev = t;
            let half = SpectralField::from_coeffs_unchecked(grid, moved.clone());
            let beta = heat_step(&half, t_n, t, config.nu, config.forcing.as_ref())?;
            samples.push(TrajectorySample::new(t, beta));
        }
        beta_n = samples.last().expect("just pushed").omega.clone();
    }
    Ok(SplitTrajectory {
        dt: config.dt,
        samples_per_step: m,
        samples,
    })
}

/// `‖D_t β^Δ + U·∇β^Δ − νΔβ^Δ − g‖_{L²}` at the interior samples of every
/// outer interval, with centred differences that never straddle a
/// breakpoint.
pub fn defect_norm(
    trajectory: &SplitTrajectory,
    velocity: &dyn VelocityProvider,
    forcing: &dyn Forcing,
    nu: f64,
) -> Result<Vec<(f64, f64)>> {
    let m = trajectory.samples_per_step;
    let samples = &trajectory.samples;
    if m < 2 || samples.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: if m < 2 { m + 1 } else { samples.len() },
        });
    }
    let grid = samples[0].omega.grid();
    let mut kernel = Kernel::new(grid);
    let mut out = Vec::new();
    for interval in samples.windows(m + 1).step_by(m) {
        for j in 1..m {
            let (prev, cur, next) = (&interval[j - 1], &interval[j], &interval[j + 1]);
            let span = next.t - prev.t;
            let u = velocity.velocity(grid, cur.t);
            let (gx, gy) = kernel.gradient_values(cur.omega.coeffs());
            let lap = cur.omega.laplacian();
            let g = (!forcing.is_zero()).then(|| forcing.vorticity_field(grid, cur.t));
            let mut sum = 0.0;
            for i in 0..grid.len() {
                let dt_beta = (next.omega.values()[i] - prev.omega.values()[i]) / span;
                let mut r = dt_beta + u.ux.values()[i] * gx[i] + u.uy.values()[i] * gy[i] - nu * lap.values()[i];
                if let Some(g) = &g {
                    r -= g.values()[i];
                }
                sum += r * r;
            }
            out.push((cur.t, (sum * grid.cell_measure()).sqrt()));
        }
    }
    Ok(out)
}

/// Unsplit integrating-factor RK4 solve of the advection–diffusion problem
/// with steps of at most `dt_max`, returning `β` at each of `times`
/// (increasing, starting at or after 0).
pub fn reference_solve(config: &SplitConfig, times: &[f64], dt_max: f64) -> Result<Vec<SpectralField>> {
    let grid = config.grid;
    let mut transport = Transport::new(grid, config.velocity.as_ref());
    let forcing = config.forcing.clone();
    let k_sq = transport.kernel.k_sq.clone();
    let mut beta = config.beta0.coeffs().to_vec();
    let mut t = 0.0;
    let mut factor: Option<IntegratingFactor> = None;
    let mut out = Vec::with_capacity(times.len());
    let rhs = |b: &[Complex], s: f64, tr: &mut Transport<'_>| -> Vec<Complex> {
        let mut r = tr.rhs(b, s);
        if !forcing.is_zero() {
            for (ri, gi) in r.iter_mut().zip(forcing.curl_coeffs(grid, s)) {
                *ri += gi;
            }
        }
        r
    };
    for &target in times {
        if target < t {
            return Err(Error::Ordering { t0: t, t: target });
        }
        let span = target - t;
        if span > 0.0 {
            let subs = (span / dt_max - 1e-9).ceil().max(1.0) as usize;
            let d = span / subs as f64;
            if factor.as_ref().is_none_or(|f| f.dt() != d) {
                factor = Some(IntegratingFactor::new(config.nu, &k_sq, d));
            }
            let f = factor.as_ref().expect("set above");
            for i in 0..subs {
                let s = t + i as f64 * d;
                let a = rhs(&beta, s, &mut transport);
                beta = f.step(&beta, s, &a, |y, tau| rhs(y, tau, &mut transport));
            }
            t = target;
        }
        out.push(SpectralField::from_coeffs_unchecked(grid, beta.clone()));
    }
    Ok(out)
}

/// Outcome classification of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Errors decrease monotonically; the order is meaningful.
    Converging,
    /// All errors sit at the quadrature floor; no order is computed.
    ExactRegime,
    /// Errors fail to decrease monotonically.
    RateFailure,
}

/// Largest error treated as exact.
pub const EXACT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub dt: f64,
    pub error: f64,
    pub order_local: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    /// Rows ordered by decreasing `Δt`.
    pub rows: Vec<RateRow>,
    pub order_global: Option<f64>,
    pub regime: Regime,
    /// Reference step used for the oracle solve.
    pub reference_dt: f64,
}

impl RateTable {
    pub fn regime_name(&self) -> String {
        String::from(match self.regime {
            Regime::Converging => "converging",
            Regime::ExactRegime => "exact_regime",
            Regime::RateFailure => "rate_failure",
        })
    }
}

fn check_geometric(dts: &[f64]) -> Result<()> {
    if dts.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: dts.len(),
        });
    }
    let ratio = dts[0] / dts[1];
    if !(ratio > 1.0) {
        return Err(Error::Configuration("Δt list must be distinct".into()));
    }
    for w in dts.windows(2) {
        if ((w[0] / w[1]) / ratio - 1.0).abs() > 1e-9 {
            return Err(Error::Configuration("Δt list must be geometric".into()));
        }
    }
    Ok(())
}

/// Errors of the splitting approximant against an unsplit reference solve at
/// `min(Δt)/100`, measured as the maximum over breakpoints of the `L²`
/// distance, with local and least-squares orders.
pub fn convergence_study(config: &SplitConfig, dt_list: &[f64]) -> Result<RateTable> {
    let mut dts = dt_list.to_vec();
    dts.sort_by(|a, b| b.total_cmp(a));
    check_geometric(&dts)?;
    let dt_min = *dts.last().expect("checked length");
    let reference_dt = dt_min / 100.0;

    let mut runs = Vec::with_capacity(dts.len());
    let mut times: Vec<f64> = Vec::new();
    for &dt in &dts {
        let run = split_run(&config.with_dt(dt))?;
        times.extend(run.breakpoints().map(|s| s.t));
        runs.push(run);
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * config.t_final);
    let reference = reference_solve(config, &times, reference_dt)?;
    let lookup = |t: f64| -> &SpectralField {
        let i = times
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * config.t_final)
            .expect("breakpoint present in the union");
        &reference[i]
    };

    let mut rows: Vec<RateRow> = Vec::with_capacity(dts.len());
    for (run, &dt) in runs.iter().zip(&dts) {
        let error = run
            .breakpoints()
            .map(|s| (&s.omega - lookup(s.t)).l2_norm())
            .fold(0.0, f64::max);
        let order_local = rows
            .last()
            .map(|prev: &RateRow| (error / prev.error).ln() / (dt / prev.dt).ln());
        rows.push(RateRow { dt, error, order_local });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let (regime, order_global) = if errors.iter().all(|e| *e < EXACT_FLOOR) {
        (Regime::ExactRegime, None)
    } else {
        let order = log_log_slope(&dts, &errors);
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        (
            if monotone { Regime::Converging } else { Regime::RateFailure },
            Some(order),
        )
    };
    if regime == Regime::ExactRegime {
        for r in rows.iter_mut() {
            r.order_local = None;
        }
    }
    Ok(RateTable {
        rows,
        order_global,
        regime,
        reference_dt,
    })
}

/// Outer steps `T/2^j`, `j = first..=last`.
pub fn halving_steps(t_final: f64, first: u32, last: u32) -> Vec<f64> {
    (first..=last).map(|j| t_final / f64::from(1u32 << j)).collect()
}

/// Convenience: unforced configuration.
pub fn unforced() -> Arc<dyn Forcing> {
    Arc::new(Unforced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{random_smooth_field, taylor_green};
    use crate::solver::SteadyForcing;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn heat_step_eigenmode_and_duhamel() {
        let g = grid(16);
        let sin = SpectralField::from_fn(g, |x, _| x.sin());
        let nu = 0.3;
        let out = heat_step(&sin, 0.5, 2.0, nu, &Unforced).unwrap();
        assert!(max_diff(&out, &sin.scaled((-nu * 1.5).exp())) < 1e-14);
        let steady = SteadyForcing::from_vorticity(sin.clone()).unwrap();
        let out = heat_step(&SpectralField::zeros(g), 0.0, 1.0, nu, &steady).unwrap();
        assert!(max_diff(&out, &sin.scaled((1.0 - (-nu).exp()) / nu)) < 1e-10);
        assert!(matches!(
            heat_step(&sin, 1.0, 0.5, nu, &Unforced),
            Err(Error::Ordering { .. })
        ));
    }

    struct Pulsing(SpectralField);

    impl Forcing for Pulsing {
        fn curl_coeffs(&self, _grid: GridSpec, t: f64) -> Vec<Complex> {
            self.0.scaled(t.cos()).coeffs().to_vec()
        }
    }

    #[test]
    fn heat_step_time_dependent_duhamel() {
        let g = grid(8);
        let sin = SpectralField::from_fn(g, |x, _| x.sin());
        let nu = 0.5;
        let out = heat_step(&SpectralField::zeros(g), 0.0, 0.2, nu, &Pulsing(sin.clone())).unwrap();
        // ∫₀^t e^{-ν(t-τ)} cos τ dτ
        let t: f64 = 0.2;
        let exact = (nu * t.cos() + t.sin() - nu * (-nu * t).exp()) / (1.0 + nu * nu);
        assert!(max_diff(&out, &sin.scaled(exact)) < 1e-12);
    }

    #[test]
    fn heat_step_sobolev_stability() {
        let g = grid(32);
        let b0 = random_smooth_field(g, 4, 1.0, 8.0).unwrap();
        let gf = random_smooth_field(g, 5, 0.5, 6.0).unwrap();
        let forcing = SteadyForcing::from_vorticity(gf.clone()).unwrap();
        let out = heat_step(&b0, 0.0, 0.3, 0.1, &forcing).unwrap();
        for sigma in [0.0, 1.0, 2.0] {
            let bound = b0.sobolev_norm(sigma) + 0.3 * gf.sobolev_norm(sigma) + 1e-10;
            assert!(out.sobolev_norm(sigma) <= bound);
        }
    }

    #[test]
    fn transport_translates() {
        let g = grid(32);
        let sin = SpectralField::from_fn(g, |x, _| x.sin());
        let shift = FrozenVelocity(VelocityField {
            ux: SpectralField::from_fn(g, |_, _| 1.0),
            uy: SpectralField::zeros(g),
        });
        let out = transport_step(&sin, 0.0, 0.7, &shift, 0.01).unwrap();
        let want = SpectralField::from_fn(g, |x, _| (x - 0.7).sin());
        assert!(max_diff(&out, &want) < 1e-8);
        let same = transport_step(&sin, 0.0, 0.7, &ZeroVelocity, 0.01).unwrap();
        assert_eq!(same.coeffs(), sin.coeffs());
        let fast = FrozenVelocity(shift.0.scaled(100.0));
        assert!(matches!(
            transport_step(&sin, 0.0, 0.7, &fast, 0.01),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn transport_conserves_mean() {
        let g = grid(32);
        let tg = taylor_green(g, 0.0, 0.0);
        let b0 = random_smooth_field(g, 2, 1.0, 6.0).unwrap();
        let out = transport_step(&b0, 0.0, 0.5, &FrozenVelocity(tg.velocity), 0.01).unwrap();
        assert!(out.mean().abs() < 1e-12);
    }

    fn heat_only(beta0: SpectralField, dt: f64) -> SplitConfig {
        SplitConfig::new(beta0, 0.2, dt, 1.0, Arc::new(ZeroVelocity), unforced())
    }

    #[test]
    fn split_without_transport_is_the_heat_semigroup() {
        let g = grid(16);
        let b0 = random_smooth_field(g, 8, 1.0, 4.0).unwrap();
        let run = split_run(&heat_only(b0.clone(), 0.125)).unwrap();
        let direct = heat_step(&b0, 0.0, 1.0, 0.2, &Unforced).unwrap();
        assert!(max_diff(run.last(), &direct) < 1e-9);
        assert_eq!(run.samples.len(), 8 * SAMPLES_PER_STEP + 1);
        assert_eq!(run.breakpoints().count(), 9);
        let sin = SpectralField::from_fn(g, |x, _| x.sin());
        let run = split_run(&heat_only(sin.clone(), 0.25)).unwrap();
        assert!(max_diff(run.last(), &sin.scaled((-0.2f64).exp())) < 1e-12);
    }

    #[test]
    fn split_rejects_bad_configs() {
        let g = grid(16);
        let b0 = random_smooth_field(g, 8, 1.0, 4.0).unwrap();
        assert!(split_run(&heat_only(b0.clone(), 0.3)).is_err());
        let mean = SpectralField::from_fn(g, |_, _| 1.0);
        assert!(matches!(split_run(&heat_only(mean, 0.25)), Err(Error::MeanViolation { .. })));
        let mut cfg = heat_only(b0, 0.25);
        cfg.nu = 0.0;
        assert!(split_run(&cfg).is_err());
    }

    #[test]
    fn exact_regime_without_transport() {
        let g = grid(16);
        let b0 = random_smooth_field(g, 8, 1.0, 4.0).unwrap();
        let table = convergence_study(&heat_only(b0.clone(), 1.0), &[0.5, 0.25, 0.125]).unwrap();
        assert_eq!(table.regime, Regime::ExactRegime);
        assert!(table.order_global.is_none());
        assert!(table.rows.iter().all(|r| r.error < EXACT_FLOOR));
        assert!(convergence_study(&heat_only(b0.clone(), 1.0), &[0.5, 0.25]).is_err());
        assert!(convergence_study(&heat_only(b0, 1.0), &[0.5, 0.25, 0.1]).is_err());
    }

    #[test]
    fn defect_needs_interior_samples() {
        let g = grid(16);
        let b0 = random_smooth_field(g, 8, 1.0, 4.0).unwrap();
        let mut cfg = heat_only(b0, 0.25);
        cfg.samples_per_step = 1;
        let run = split_run(&cfg).unwrap();
        assert!(matches!(
            defect_norm(&run, &ZeroVelocity, &Unforced, 0.2),
            Err(Error::InsufficientData { .. })
        ));
    }
}
