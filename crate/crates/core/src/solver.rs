//! Integrating-factor RK4 for the forced vorticity equation
//! `∂t ω + u·∇ω = νΔω + g`, `u = ∇⊥Δ⁻¹ω`.
//!
//! The viscous term is integrated exactly through the factor `e^{-ν|k|²t}`;
//! the advective term is evaluated pseudo-spectrally with 2/3-rule
//! dealiasing. The solver state (initial data and forcing included) lives
//! in the retained band, so the discrete energy identity holds up to the
//! time-stepping and ledger quadrature errors.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// Float supplies libm-backed math without std; with std linked it is shadowed.
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::field::{spectral, SpectralField, VelocityField};
use crate::grid::GridSpec;
use crate::quadrature::cumulative_trapezoid;
use crate::scenarios::{self, ScenarioRef};
use crate::Complex;

/// Advective CFL bound `dt·max|u|/h`.
pub const CFL_LIMIT: f64 = 0.5;

/// Maximum number of step halvings tried on a CFL violation.
pub const MAX_HALVINGS: u32 = 10;

/// Time-dependent forcing of the vorticity equation.
///
/// Implementors supply the vorticity forcing `g = curl f`; the velocity
/// forcing defaults to its Biot–Savart velocity.
pub trait Forcing: Send + Sync {
    /// True when the forcing vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }

    /// True when the forcing does not depend on time.
    fn is_steady(&self) -> bool {
        false
    }

    /// Coefficients of `g(t)`.
    fn curl_coeffs(&self, grid: GridSpec, t: f64) -> Vec<Complex>;

    /// Coefficients of the velocity forcing `f(t)`.
    fn velocity_coeffs(&self, grid: GridSpec, t: f64) -> (Vec<Complex>, Vec<Complex>) {
        spectral::biot_savart(grid, &self.curl_coeffs(grid, t))
    }

    fn vorticity_field(&self, grid: GridSpec, t: f64) -> SpectralField {
        SpectralField::from_coeffs_unchecked(grid, self.curl_coeffs(grid, t))
    }

    fn velocity_field(&self, grid: GridSpec, t: f64) -> VelocityField {
        let (fx, fy) = self.velocity_coeffs(grid, t);
        VelocityField::from_coeffs(grid, fx, fy)
    }
}

/// The zero forcing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unforced;

impl Forcing for Unforced {
    fn is_zero(&self) -> bool {
        true
    }

    fn is_steady(&self) -> bool {
        true
    }

    fn curl_coeffs(&self, grid: GridSpec, _t: f64) -> Vec<Complex> {
        vec![Complex::new(0.0, 0.0); grid.len()]
    }
}

/// Time-independent forcing with both representations stored.
#[derive(Debug, Clone)]
pub struct SteadyForcing {
    g: SpectralField,
    f: VelocityField,
}

impl SteadyForcing {
    /// From a zero-mean vorticity forcing; `f` is its Biot–Savart velocity.
    pub fn from_vorticity(g: SpectralField) -> Result<Self> {
        let f = crate::field::biot_savart(&g)?;
        Ok(Self { g, f })
    }

    /// From a divergence-free velocity forcing; `g = curl f`.
    pub fn from_velocity(f: VelocityField) -> Self {
        Self { g: f.curl(), f }
    }

    pub fn vorticity(&self) -> &SpectralField {
        &self.g
    }

    pub fn velocity(&self) -> &VelocityField {
        &self.f
    }
}

impl Forcing for SteadyForcing {
    fn is_steady(&self) -> bool {
        true
    }

    fn curl_coeffs(&self, _grid: GridSpec, _t: f64) -> Vec<Complex> {
        self.g.coeffs().to_vec()
    }

    fn velocity_coeffs(&self, _grid: GridSpec, _t: f64) -> (Vec<Complex>, Vec<Complex>) {
        (self.f.ux.coeffs().to_vec(), self.f.uy.coeffs().to_vec())
    }
}

/// Everything needed for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: GridSpec,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub initial: ScenarioRef,
    pub forcing: ScenarioRef,
    pub snapshot_stride: usize,
    /// When false the advective term is switched off (forced heat equation).
    pub advection: bool,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::Configuration(format!("viscosity must be >= 0, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return Err(Error::Configuration("dt and T must be positive".into()));
        }
        if self.dt > self.t_final {
            return Err(Error::Configuration(format!(
                "dt = {} exceeds the horizon T = {}",
                self.dt, self.t_final
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Configuration("snapshot_stride must be positive".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> SolverParams {
        SolverParams {
            grid: self.grid,
            nu: self.nu,
            dt: self.dt,
            t_final: self.t_final,
            snapshot_stride: self.snapshot_stride,
            advection: self.advection,
        }
    }
}

/// Numerical parameters of a run with already-resolved data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub grid: GridSpec,
    pub nu: f64,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub advection: bool,
}

/// Vorticity snapshot; the velocity is recovered on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub omega: SpectralField,
}

impl TrajectorySample {
    pub fn new(t: f64, omega: SpectralField) -> Self {
        Self { t, omega }
    }

    /// `u = biot_savart(ω)`.
    pub fn velocity(&self) -> VelocityField {
        let (ux, uy) = spectral::biot_savart(self.omega.grid(), self.omega.coeffs());
        VelocityField::from_coeffs(self.omega.grid(), ux, uy)
    }
}

/// Energy bookkeeping of one run, sampled at every completed step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub nu: f64,
    pub times: Vec<f64>,
    /// `½‖u‖²`
    pub energy: Vec<f64>,
    /// `‖ω‖²`
    pub enstrophy: Vec<f64>,
    /// `ν∫₀^t ‖ω‖²`
    pub dissipation_cum: Vec<f64>,
    /// `∫₀^t ⟨f, u⟩`
    pub work_cum: Vec<f64>,
    /// `½‖u(t)‖² − ½‖u₀‖² + dissipation − work`
    pub identity_residual: Vec<f64>,
}

impl RunLedger {
    /// Builds the cumulative columns from pointwise energy, enstrophy and
    /// power `⟨f, u⟩` samples.
    pub fn from_samples(nu: f64, times: Vec<f64>, energy: Vec<f64>, enstrophy: Vec<f64>, power: &[f64]) -> Self {
        let diss_rate: Vec<f64> = enstrophy.iter().map(|z| nu * z).collect();
        let dissipation_cum = cumulative_trapezoid(&times, &diss_rate);
        let work_cum = cumulative_trapezoid(&times, power);
        let e0 = energy.first().copied().unwrap_or(0.0);
        let identity_residual = energy
            .iter()
            .zip(&dissipation_cum)
            .zip(&work_cum)
            .map(|((e, d), w)| e - e0 + d - w)
            .collect();
        Self {
            nu,
            times,
            energy,
            enstrophy,
            dissipation_cum,
            work_cum,
            identity_residual,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs_identity_residual(&self) -> f64 {
        self.identity_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Completed (or partially completed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub trajectory: Vec<TrajectorySample>,
    pub ledger: RunLedger,
}

/// A run that stopped early; `partial` holds everything computed so far.
#[derive(Debug, Clone, thiserror::Error)]
#[error("run aborted at t = {t}: {source}")]
pub struct RunError {
    pub t: f64,
    #[source]
    pub source: Error,
    pub partial: Box<Run>,
}

/// Precomputed spectral multipliers and transform workspace.
pub(crate) struct Kernel {
    pub grid: GridSpec,
    pub fft: Fft2d,
    bs_x: Vec<Complex>,
    bs_y: Vec<Complex>,
    dx: Vec<Complex>,
    dy: Vec<Complex>,
    retained: Vec<bool>,
    pub k_sq: Vec<f64>,
}

impl Kernel {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n();
        let len = grid.len();
        let mut bs_x = vec![Complex::new(0.0, 0.0); len];
        let mut bs_y = vec![Complex::new(0.0, 0.0); len];
        let mut dx = vec![Complex::new(0.0, 0.0); len];
        let mut dy = vec![Complex::new(0.0, 0.0); len];
        let mut retained = vec![false; len];
        let mut k_sq = vec![0.0; len];
        let odd_k = |i: usize| {
            if i == grid.nyquist() {
                0.0
            } else {
                grid.wavenumber(i) as f64
            }
        };
        for idx in 0..len {
            let (kx, ky) = grid.wavevector(idx);
            k_sq[idx] = (kx * kx + ky * ky) as f64;
            retained[idx] = grid.is_retained(kx, ky);
            let (ox, oy) = (odd_k(idx % n), odd_k(idx / n));
            dx[idx] = Complex::new(0.0, ox);
            dy[idx] = Complex::new(0.0, oy);
            if idx > 0 {
                bs_x[idx] = Complex::new(0.0, oy / k_sq[idx]);
                bs_y[idx] = Complex::new(0.0, -ox / k_sq[idx]);
            }
        }
        Self {
            grid,
            fft: Fft2d::new(n),
            bs_x,
            bs_y,
            dx,
            dy,
            retained,
            k_sq,
        }
    }

    pub fn project(&self, c: &mut [Complex]) {
        for (v, keep) in c.iter_mut().zip(&self.retained) {
            if !keep {
                *v = Complex::new(0.0, 0.0);
            }
        }
    }

    /// Grid values of `u = ∇⊥Δ⁻¹ω`.
    pub fn velocity_values(&mut self, omega: &[Complex]) -> (Vec<f64>, Vec<f64>) {
        let ux: Vec<Complex> = omega.iter().zip(&self.bs_x).map(|(w, m)| w * m).collect();
        let uy: Vec<Complex> = omega.iter().zip(&self.bs_y).map(|(w, m)| w * m).collect();
        self.fft.values_of_pair(&ux, &uy)
    }

    /// Grid values of `∇β`.
    pub fn gradient_values(&mut self, beta: &[Complex]) -> (Vec<f64>, Vec<f64>) {
        let gx: Vec<Complex> = beta.iter().zip(&self.dx).map(|(w, m)| w * m).collect();
        let gy: Vec<Complex> = beta.iter().zip(&self.dy).map(|(w, m)| w * m).collect();
        self.fft.values_of_pair(&gx, &gy)
    }

    /// `−P(U·∇β)` for grid velocity values `(ux, uy)`; mean mode set to zero.
    pub fn advection(&mut self, ux: &[f64], uy: &[f64], beta: &[Complex]) -> Vec<Complex> {
        let (gx, gy) = self.gradient_values(beta);
        let prod: Vec<f64> = (0..ux.len())
            .map(|i| -(ux[i] * gx[i] + uy[i] * gy[i]))
            .collect();
        let mut c = self.fft.coeffs_of(&prod);
        self.project(&mut c);
        c[0] = Complex::new(0.0, 0.0);
        c
    }

    /// `−P(u·∇ω)` with `u` the Biot–Savart velocity of `ω`, plus `max|u|`.
    pub fn nonlinear(&mut self, omega: &[Complex]) -> (Vec<Complex>, f64) {
        let (ux, uy) = self.velocity_values(omega);
        let umax = max_speed(&ux, &uy);
        (self.advection(&ux, &uy, omega), umax)
    }
}

pub(crate) fn max_speed(ux: &[f64], uy: &[f64]) -> f64 {
    ux.iter()
        .zip(uy)
        .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
}

/// Exact viscous propagators `e^{-ν|k|²dt}` and `e^{-ν|k|²dt/2}`.
pub(crate) struct IntegratingFactor {
    dt: f64,
    full: Vec<f64>,
    half: Vec<f64>,
}

impl IntegratingFactor {
    pub fn new(nu: f64, k_sq: &[f64], dt: f64) -> Self {
        Self {
            dt,
            full: k_sq.iter().map(|k| (-nu * k * dt).exp()).collect(),
            half: k_sq.iter().map(|k| (-nu * k * 0.5 * dt).exp()).collect(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One Lawson RK4 step of `y' = -ν|k|² y + N(y, t)` given `a = N(y, t)`.
    pub fn step(
        &self,
        y: &[Complex],
        t: f64,
        a: &[Complex],
        mut rhs: impl FnMut(&[Complex], f64) -> Vec<Complex>,
    ) -> Vec<Complex> {
        let dt = self.dt;
        let (e, e2) = (&self.full, &self.half);
        let len = y.len();
        let s2: Vec<Complex> = (0..len).map(|i| (y[i] + a[i] * (0.5 * dt)) * e2[i]).collect();
        let b = rhs(&s2, t + 0.5 * dt);
        let s3: Vec<Complex> = (0..len).map(|i| y[i] * e2[i] + b[i] * (0.5 * dt)).collect();
        let c = rhs(&s3, t + 0.5 * dt);
        let s4: Vec<Complex> = (0..len).map(|i| y[i] * e[i] + c[i] * (dt * e2[i])).collect();
        let d = rhs(&s4, t + dt);
        (0..len)
            .map(|i| {
                y[i] * e[i]
                    + (a[i] * e[i] + (b[i] + c[i]) * (2.0 * e2[i]) + d[i]) * (dt / 6.0)
            })
            .collect()
    }
}

/// `−dealias(u·∇ω)` for zero-mean `ω`.
pub fn nonlinear_term(omega: &SpectralField) -> Result<SpectralField> {
    omega.require_zero_mean()?;
    let mut kernel = Kernel::new(omega.grid());
    let (c, _) = kernel.nonlinear(omega.coeffs());
    Ok(SpectralField::from_coeffs_unchecked(omega.grid(), c))
}

/// Advective CFL number `dt·max|u|/h`.
fn cfl_number(dt: f64, umax: f64, grid: GridSpec) -> f64 {
    dt * umax / grid.h()
}

struct Stepper<'a> {
    kernel: Kernel,
    nu: f64,
    advection: bool,
    forcing: &'a dyn Forcing,
    factors: Vec<IntegratingFactor>,
}

impl<'a> Stepper<'a> {
    fn new(grid: GridSpec, nu: f64, advection: bool, forcing: &'a dyn Forcing) -> Self {
        Self {
            kernel: Kernel::new(grid),
            nu,
            advection,
            forcing,
            factors: Vec::new(),
        }
    }

    fn forcing_coeffs(&mut self, t: f64) -> Option<Vec<Complex>> {
        if self.forcing.is_zero() {
            return None;
        }
        let mut g = self.forcing.curl_coeffs(self.kernel.grid, t);
        self.kernel.project(&mut g);
        Some(g)
    }

    /// Right-hand side without the viscous term, plus `max|u|`.
    fn rhs(&mut self, omega: &[Complex], t: f64) -> (Vec<Complex>, f64) {
        let (mut out, umax) = if self.advection {
            self.kernel.nonlinear(omega)
        } else {
            (vec![Complex::new(0.0, 0.0); omega.len()], 0.0)
        };
        if let Some(g) = self.forcing_coeffs(t) {
            for (o, gi) in out.iter_mut().zip(g) {
                *o += gi;
            }
        }
        (out, umax)
    }

    fn factor(&mut self, dt: f64) -> usize {
        if let Some(i) = self.factors.iter().position(|f| f.dt() == dt) {
            return i;
        }
        self.factors
            .push(IntegratingFactor::new(self.nu, &self.kernel.k_sq, dt));
        self.factors.len() - 1
    }

    /// Advances by `dt`, halving on CFL violations. Each completed sub-step
    /// is reported through `record`.
    fn advance(
        &mut self,
        omega: Vec<Complex>,
        t: f64,
        dt: f64,
        depth: u32,
        record: &mut dyn FnMut(&mut Self, f64, &[Complex]),
    ) -> core::result::Result<Vec<Complex>, (Vec<Complex>, f64, Error)> {
        let (a, umax) = self.rhs(&omega, t);
        if cfl_number(dt, umax, self.kernel.grid) > CFL_LIMIT {
            if depth >= MAX_HALVINGS {
                let suggested = CFL_LIMIT * self.kernel.grid.h() / umax;
                return Err((omega, t, Error::StepSize { dt, suggested }));
            }
            let half = 0.5 * dt;
            let mid = self.advance(omega, t, half, depth + 1, record)?;
            return self.advance(mid, t + half, half, depth + 1, record);
        }
        let fi = self.factor(dt);
        let factor = core::mem::replace(&mut self.factors[fi], IntegratingFactor::new(0.0, &[], dt));
        let next = factor.step(&omega, t, &a, |y, s| self.rhs(y, s).0);
        self.factors[fi] = factor;
        record(self, t + dt, &next);
        Ok(next)
    }
}

/// One integrating-factor RK4 step of size `dt` (no adaptive halving).
pub fn step(
    state: &TrajectorySample,
    dt: f64,
    nu: f64,
    forcing: &dyn Forcing,
) -> Result<TrajectorySample> {
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let grid = state.omega.grid();
    let mut stepper = Stepper::new(grid, nu, true, forcing);
    let (a, umax) = stepper.rhs(state.omega.coeffs(), state.t);
    if cfl_number(dt, umax, grid) > CFL_LIMIT {
        return Err(Error::StepSize {
            dt,
            suggested: CFL_LIMIT * grid.h() / umax,
        });
    }
    let factor = IntegratingFactor::new(nu, &stepper.kernel.k_sq, dt);
    let next = factor.step(state.omega.coeffs(), state.t, &a, |y, s| stepper.rhs(y, s).0);
    Ok(TrajectorySample::new(
        state.t + dt,
        SpectralField::from_coeffs_unchecked(grid, next),
    ))
}

/// Resolves the scenarios of `config` and integrates to `T`.
pub fn run(config: &SimulationConfig) -> core::result::Result<Run, RunError> {
    let fail = |source: Error| RunError {
        t: 0.0,
        source,
        partial: Box::new(Run {
            trajectory: Vec::new(),
            ledger: RunLedger {
                nu: config.nu,
                ..RunLedger::default()
            },
        }),
    };
    config.validate().map_err(fail)?;
    let omega0 = scenarios::initial_vorticity(&config.initial, config.grid, config.nu).map_err(fail)?;
    let forcing = scenarios::forcing(&config.forcing, config.grid, config.nu).map_err(fail)?;
    run_with(&config.params(), &omega0, forcing.as_ref())
}

struct LedgerBuilder {
    times: Vec<f64>,
    energy: Vec<f64>,
    enstrophy: Vec<f64>,
    power: Vec<f64>,
}

impl LedgerBuilder {
    fn push(&mut self, grid: GridSpec, forcing: &dyn Forcing, t: f64, omega: &[Complex]) {
        self.times.push(t);
        self.energy.push(spectral::energy_of_vorticity(grid, omega));
        self.enstrophy.push(spectral::norm_sq(omega));
        let power = if forcing.is_zero() {
            0.0
        } else {
            let (fx, fy) = forcing.velocity_coeffs(grid, t);
            let (ux, uy) = spectral::biot_savart(grid, omega);
            spectral::inner(&fx, &ux) + spectral::inner(&fy, &uy)
        };
        self.power.push(power);
    }

    fn finish(self, nu: f64) -> RunLedger {
        RunLedger::from_samples(nu, self.times, self.energy, self.enstrophy, &self.power)
    }
}

/// Integrates from `omega0` (projected onto the retained band) to
/// `params.t_final`. The horizon is split into `⌈T/dt⌉` equal macro steps.
pub fn run_with(
    params: &SolverParams,
    omega0: &SpectralField,
    forcing: &dyn Forcing,
) -> core::result::Result<Run, RunError> {
    let grid = params.grid;
    let abort = |t: f64, source: Error, trajectory: Vec<TrajectorySample>, ledger: RunLedger| RunError {
        t,
        source,
        partial: Box::new(Run { trajectory, ledger }),
    };
    if omega0.grid() != grid {
        return Err(abort(
            0.0,
            Error::Dimension("initial vorticity grid differs from the run grid".into()),
            Vec::new(),
            RunLedger::default(),
        ));
    }
    let mut stepper = Stepper::new(grid, params.nu, params.advection, forcing);
    let mut omega = omega0.coeffs().to_vec();
    stepper.kernel.project(&mut omega);

    let steps = ((params.t_final / params.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = params.t_final / steps as f64;

    let mut ledger = LedgerBuilder {
        times: Vec::new(),
        energy: Vec::new(),
        enstrophy: Vec::new(),
        power: Vec::new(),
    };
    ledger.push(grid, forcing, 0.0, &omega);
    let mut trajectory = vec![TrajectorySample::new(
        0.0,
        SpectralField::from_coeffs_unchecked(grid, omega.clone()),
    )];

    let mut record = |s: &mut Stepper<'_>, t: f64, w: &[Complex]| {
        ledger.push(s.kernel.grid, s.forcing, t, w);
    };
    for i in 0..steps {
        let t = i as f64 * dt;
        match stepper.advance(omega, t, dt, 0, &mut record) {
            Ok(next) => omega = next,
            Err((last, t_fail, err)) => {
                trajectory.push(TrajectorySample::new(
                    t_fail,
                    SpectralField::from_coeffs_unchecked(grid, last),
                ));
                return Err(abort(t_fail, err, trajectory, ledger.finish(params.nu)));
            }
        }
        if (i + 1) % params.snapshot_stride == 0 || i + 1 == steps {
            trajectory.push(TrajectorySample::new(
                (i + 1) as f64 * dt,
                SpectralField::from_coeffs_unchecked(grid, omega.clone()),
            ));
        }
    }
    // the final ledger time is pinned to T exactly
    if let Some(last) = ledger.times.last_mut() {
        *last = params.t_final;
    }
    Ok(Run {
        trajectory,
        ledger: ledger.finish(params.nu),
    })
}

/// Evaluator for the strong vorticity residual
/// `‖∂tω + u·∇ω − νΔω − g‖_{L²}` at the middle of three samples, with the
/// second-order three-point difference for `∂tω` on nonuniform spacing.
/// Keeps transform buffers so long trajectories can be streamed.
pub struct PdeResidual {
    kernel: Kernel,
}

impl PdeResidual {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            kernel: Kernel::new(grid),
        }
    }

    pub fn at(
        &mut self,
        prev: &TrajectorySample,
        cur: &TrajectorySample,
        next: &TrajectorySample,
        forcing: &dyn Forcing,
        nu: f64,
    ) -> Result<f64> {
        let grid = self.kernel.grid;
        if [prev, cur, next].iter().any(|s| s.omega.grid() != grid) {
            return Err(Error::Dimension("residual samples live on different grids".into()));
        }
        let (hm, hp) = (cur.t - prev.t, next.t - cur.t);
        if !(hm > 0.0 && hp > 0.0) {
            return Err(Error::Ordering { t0: prev.t, t: next.t });
        }
        let wm = -hp / (hm * (hm + hp));
        let w0 = (hp - hm) / (hm * hp);
        let wp = hm / (hp * (hm + hp));
        let (ux, uy) = self.kernel.velocity_values(cur.omega.coeffs());
        let (gx, gy) = self.kernel.gradient_values(cur.omega.coeffs());
        let prod: Vec<f64> = (0..grid.len()).map(|i| ux[i] * gx[i] + uy[i] * gy[i]).collect();
        let adv = self.kernel.fft.coeffs_of(&prod);
        let g = if forcing.is_zero() {
            None
        } else {
            Some(forcing.curl_coeffs(grid, cur.t))
        };
        let (p, c, q) = (prev.omega.coeffs(), cur.omega.coeffs(), next.omega.coeffs());
        // Parseval: the grid L² norm of the residual equals its coefficient norm
        let mut sum = 0.0;
        for i in 0..grid.len() {
            let mut r = p[i] * wm + c[i] * w0 + q[i] * wp + adv[i] + c[i] * (nu * self.kernel.k_sq[i]);
            if let Some(g) = &g {
                r -= g[i];
            }
            sum += r.norm_sqr();
        }
        Ok((sum * GridSpec::DOMAIN_MEASURE).sqrt())
    }
}

/// Residual time series `(t, ‖·‖_{L²})` at every interior sample; see
/// [`PdeResidual`].
pub fn pde_residual(
    trajectory: &[TrajectorySample],
    forcing: &dyn Forcing,
    nu: f64,
) -> Result<Vec<(f64, f64)>> {
    if trajectory.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: trajectory.len(),
        });
    }
    let mut eval = PdeResidual::new(trajectory[0].omega.grid());
    trajectory
        .windows(3)
        .map(|w| Ok((w[1].t, eval.at(&w[0], &w[1], &w[2], forcing, nu)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::taylor_green;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn nonlinear_term_vanishes_for_taylor_green() {
        let tg = taylor_green(grid(32), 0.0, 0.0);
        let n = nonlinear_term(&tg.vorticity).unwrap();
        assert!(n.max_abs() < 1e-11);
    }

    #[test]
    fn nonlinear_term_vanishes_for_shear() {
        let g = grid(16);
        let w = SpectralField::from_fn(g, |x, _| x.sin());
        // direct grid evaluation: u = (0, -cos x), ∇ω = (cos x, 0)
        let direct: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coord(i % g.n());
                0.0 * x.cos() + (-x.cos()) * 0.0
            })
            .collect();
        let n = nonlinear_term(&w).unwrap();
        assert!(max_diff(n.values(), &direct) < 1e-12);
    }

    #[test]
    fn nonlinear_term_has_zero_mean() {
        let w = crate::scenarios::random_smooth_field(grid(32), 3, 1.0, 8.0).unwrap();
        let n = nonlinear_term(&w).unwrap();
        assert!(n.mean().abs() < 1e-12);
        assert!(nonlinear_term(&SpectralField::from_fn(grid(16), |_, _| 1.0)).is_err());
    }

    #[test]
    fn step_decays_eigenmode_exactly() {
        let g = grid(16);
        let (nu, dt) = (0.1, 0.01);
        let s = TrajectorySample::new(0.0, SpectralField::from_fn(g, |x, _| x.sin()));
        let next = step(&s, dt, nu, &Unforced).unwrap();
        let want = s.omega.scaled((-nu * dt).exp());
        assert!(max_diff(next.omega.values(), want.values()) < 1e-10);
        assert!((next.t - dt).abs() < 1e-15);
    }

    #[test]
    fn step_keeps_steady_euler_state() {
        let tg = taylor_green(grid(32), 0.0, 0.0);
        let s = TrajectorySample::new(0.0, tg.vorticity.clone());
        let next = step(&s, 0.01, 0.0, &Unforced).unwrap();
        assert!(max_diff(next.omega.values(), tg.vorticity.values()) < 1e-10);
        let same = step(&s, 0.0, 0.0, &Unforced).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn step_rejects_cfl_violation() {
        let tg = taylor_green(grid(32), 0.0, 0.0);
        let s = TrajectorySample::new(0.0, tg.vorticity.scaled(100.0));
        match step(&s, 0.5, 0.0, &Unforced) {
            Err(Error::StepSize { suggested, .. }) => assert!(suggested < 0.5),
            other => panic!("expected step-size error, got {other:?}"),
        }
    }

    #[test]
    fn zero_run_has_zero_ledger() {
        let cfg = SimulationConfig {
            grid: grid(16),
            nu: 0.01,
            dt: 0.1,
            t_final: 1.0,
            initial: ScenarioRef::zero(),
            forcing: ScenarioRef::zero(),
            snapshot_stride: 5,
            advection: true,
        };
        let run = run(&cfg).unwrap();
        assert_eq!(run.ledger.len(), 11);
        for col in [
            &run.ledger.energy,
            &run.ledger.enstrophy,
            &run.ledger.dissipation_cum,
            &run.ledger.work_cum,
            &run.ledger.identity_residual,
        ] {
            assert!(col.iter().all(|v| *v == 0.0));
        }
        assert_eq!(run.trajectory.len(), 3);
        assert_eq!(run.ledger.times.last().copied(), Some(1.0));
    }

    #[test]
    fn adaptive_halving_keeps_ledger_consistent() {
        let g = grid(32);
        let tg = taylor_green(g, 0.0, 0.0);
        let params = SolverParams {
            grid: g,
            nu: 0.0,
            dt: 0.15,
            t_final: 0.3,
            snapshot_stride: 1,
            advection: true,
        };
        // max|u| = 1, h ≈ 0.196: dt = 0.15 needs one halving
        let run = run_with(&params, &tg.vorticity, &Unforced).unwrap();
        assert_eq!(run.ledger.len(), 5);
        assert_eq!(run.trajectory.len(), 3);
        let hard = SolverParams { dt: 0.4, ..params };
        let scaled = tg.vorticity.scaled(1e4);
        let err = run_with(&hard, &scaled, &Unforced).unwrap_err();
        assert!(matches!(err.source, Error::StepSize { .. }));
        assert_eq!(err.partial.ledger.len(), 1);
    }

    #[test]
    fn residual_needs_three_samples() {
        let s = TrajectorySample::new(0.0, SpectralField::zeros(grid(8)));
        assert!(matches!(
            pde_residual(&[s.clone(), s], &Unforced, 0.1),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn residual_of_zero_trajectory_is_zero() {
        let traj: Vec<_> = (0..4)
            .map(|i| TrajectorySample::new(i as f64 * 0.1, SpectralField::zeros(grid(8))))
            .collect();
        let r = pde_residual(&traj, &Unforced, 0.1).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|(_, v)| *v == 0.0));
    }
}
