//! Initial data, forcings and exact reference solutions.
//!
//! Generators are pure and seed-deterministic. Every generated vorticity has
//! zero mean and every generated velocity is divergence-free.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Float supplies libm-backed math without std; with std linked it is shadowed.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{biot_savart, spectral, SpectralField, VelocityField};
use crate::grid::GridSpec;
use crate::solver::{Forcing, SteadyForcing, TrajectorySample, Unforced};
use crate::Complex;

/// Scenario families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    TaylorGreen,
    Counterexample,
    LpFamily,
    LorentzFamily,
    LloglFamily,
    RandomSmooth,
    Zero,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::TaylorGreen,
        ScenarioKind::Counterexample,
        ScenarioKind::LpFamily,
        ScenarioKind::LorentzFamily,
        ScenarioKind::LloglFamily,
        ScenarioKind::RandomSmooth,
        ScenarioKind::Zero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::TaylorGreen => "taylor_green",
            ScenarioKind::Counterexample => "counterexample",
            ScenarioKind::LpFamily => "lp_family",
            ScenarioKind::LorentzFamily => "lorentz_family",
            ScenarioKind::LloglFamily => "llogl_family",
            ScenarioKind::RandomSmooth => "random_smooth",
            ScenarioKind::Zero => "zero",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Parameter names accepted by this kind, with their defaults.
    /// `velocity_norm` has no default: it only applies when given.
    pub fn param_defaults(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            ScenarioKind::TaylorGreen => &[("amplitude", Some(1.0))],
            ScenarioKind::Counterexample | ScenarioKind::Zero => &[],
            ScenarioKind::LpFamily => &[("p", Some(2.0)), ("amplitude", Some(1.0)), ("seed", Some(0.0))],
            ScenarioKind::LorentzFamily => &[("q", Some(1.0)), ("amplitude", Some(1.0)), ("seed", Some(0.0))],
            ScenarioKind::LloglFamily => &[("alpha", Some(1.0)), ("amplitude", Some(1.0)), ("seed", Some(0.0))],
            ScenarioKind::RandomSmooth => &[
                ("seed", Some(0.0)),
                ("slope", Some(2.0)),
                ("k_max", Some(8.0)),
                ("amplitude", Some(1.0)),
                ("velocity_norm", None),
            ],
        }
    }
}

/// A scenario kind plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRef {
    pub kind: ScenarioKind,
    pub params: BTreeMap<String, f64>,
}

impl ScenarioRef {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn zero() -> Self {
        Self::new(ScenarioKind::Zero)
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Explicit value or the kind's default.
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied().or_else(|| {
            self.kind
                .param_defaults()
                .iter()
                .find(|(k, _)| *k == key)
                .and_then(|(_, d)| *d)
        })
    }

    fn get(&self, key: &str) -> f64 {
        self.param(key).unwrap_or(f64::NAN)
    }

    /// Rejects unknown parameters and out-of-range values.
    pub fn validate(&self) -> Result<()> {
        let allowed = self.kind.param_defaults();
        for (key, value) in &self.params {
            if !allowed.iter().any(|(k, _)| k == key) {
                return Err(Error::Configuration(format!(
                    "scenario {} has no parameter {key}",
                    self.kind.name()
                )));
            }
            if !value.is_finite() && !(key == "slope" && *value == f64::INFINITY) {
                return Err(Error::Domain(format!("{key} = {value} is not finite")));
            }
        }
        let bad = |msg: String| Err(Error::Domain(msg));
        match self.kind {
            ScenarioKind::LpFamily if self.get("p") <= 1.0 => bad(format!("p = {} must exceed 1", self.get("p"))),
            ScenarioKind::LorentzFamily if !(1.0..=2.0).contains(&self.get("q")) => {
                bad(format!("q = {} must lie in [1, 2]", self.get("q")))
            }
            ScenarioKind::LloglFamily if self.get("alpha") <= 0.5 => {
                bad(format!("alpha = {} must exceed 1/2", self.get("alpha")))
            }
            ScenarioKind::RandomSmooth if self.get("k_max") < 1.0 => {
                bad(format!("k_max = {} must be at least 1", self.get("k_max")))
            }
            ScenarioKind::RandomSmooth if self.get("slope") < 0.0 => {
                bad(format!("slope = {} must be non-negative", self.get("slope")))
            }
            ScenarioKind::RandomSmooth if self.param("velocity_norm").is_some_and(|v| v < 0.0) => {
                bad("velocity_norm must be non-negative".into())
            }
            _ => Ok(()),
        }
    }

    fn seed(&self) -> Result<u64> {
        let s = self.get("seed");
        if s < 0.0 || s.fract() != 0.0 {
            return Err(Error::Domain(format!("seed = {s} must be a non-negative integer")));
        }
        Ok(s as u64)
    }
}

/// Vorticity of a scenario at `t = 0`.
pub fn initial_vorticity(scenario: &ScenarioRef, grid: GridSpec, nu: f64) -> Result<SpectralField> {
    scenario.validate()?;
    let amplitude = scenario.param("amplitude").unwrap_or(1.0);
    match scenario.kind {
        ScenarioKind::Zero => Ok(SpectralField::zeros(grid)),
        ScenarioKind::TaylorGreen => Ok(taylor_green(grid, nu, 0.0).vorticity.scaled(amplitude)),
        ScenarioKind::Counterexample => {
            // the profile vanishes at t = 0; still reject unresolved grids
            Counterexample::required_n(nu).and_then(|req| check_resolution(grid, req))?;
            Ok(SpectralField::zeros(grid))
        }
        ScenarioKind::LpFamily => vorticity_family(grid, FamilyKind::Lp(scenario.get("p")), amplitude, scenario.seed()?),
        ScenarioKind::LorentzFamily => {
            vorticity_family(grid, FamilyKind::Lorentz(scenario.get("q")), amplitude, scenario.seed()?)
        }
        ScenarioKind::LloglFamily => {
            vorticity_family(grid, FamilyKind::LlogL(scenario.get("alpha")), amplitude, scenario.seed()?)
        }
        ScenarioKind::RandomSmooth => {
            let w = random_smooth_field(grid, scenario.seed()?, scenario.get("slope"), scenario.get("k_max"))?;
            match scenario.param("velocity_norm") {
                Some(target) => {
                    let norm = (2.0 * spectral::energy_of_vorticity(grid, w.coeffs())).sqrt();
                    Ok(if norm > 0.0 { w.scaled(target / norm) } else { w })
                }
                None => Ok(w.scaled(amplitude)),
            }
        }
    }
}

/// Forcing described by a scenario: the counterexample forcing is
/// time-dependent, every other kind is a steady vorticity forcing equal to
/// the scenario's vorticity.
pub fn forcing(scenario: &ScenarioRef, grid: GridSpec, nu: f64) -> Result<Box<dyn Forcing>> {
    match scenario.kind {
        ScenarioKind::Zero => {
            scenario.validate()?;
            Ok(Box::new(Unforced))
        }
        ScenarioKind::Counterexample => {
            scenario.validate()?;
            Ok(Box::new(Counterexample::new(grid, nu)?))
        }
        _ => Ok(Box::new(SteadyForcing::from_vorticity(initial_vorticity(scenario, grid, nu)?)?)),
    }
}

/// Taylor–Green vortex with its closed-form analytics.
#[derive(Debug, Clone)]
pub struct TaylorGreen {
    pub velocity: VelocityField,
    pub vorticity: SpectralField,
    /// `½‖u‖² = π² e^{-4νt}`
    pub energy: f64,
    /// `‖ω‖² = 4π² e^{-4νt}`
    pub enstrophy: f64,
}

/// `u = e^{-2νt}(sin x cos y, −cos x sin y)`, `ω = 2e^{-2νt} sin x sin y`.
pub fn taylor_green(grid: GridSpec, nu: f64, t: f64) -> TaylorGreen {
    let a = (-2.0 * nu * t).exp();
    let ux = SpectralField::from_fn(grid, |x, y| a * x.sin() * y.cos());
    let uy = SpectralField::from_fn(grid, |x, y| -a * x.cos() * y.sin());
    let vorticity = SpectralField::from_fn(grid, |x, y| 2.0 * a * x.sin() * y.sin());
    TaylorGreen {
        velocity: VelocityField { ux, uy },
        vorticity,
        energy: taylor_green_energy(nu, t),
        enstrophy: 4.0 * PI * PI * (-4.0 * nu * t).exp(),
    }
}

pub fn taylor_green_energy(nu: f64, t: f64) -> f64 {
    PI * PI * (-4.0 * nu * t).exp()
}

/// Smooth bump `exp(1 − 1/(1 − z²))`, `z = (r − 3/4)/(1/4)`: supported on
/// `[1/2, 1]` with maximum 1 at `r = 3/4`.
pub fn bump(r: f64) -> f64 {
    sharp_bump(r, 1.0)
}

pub fn bump_derivative(r: f64) -> f64 {
    sharp_bump_derivative(r, 1.0)
}

/// `bump(r)^m = exp(m (1 − 1/(1 − z²)))`. Larger `m` concentrates the bump
/// and pushes its Fourier tail down, at the price of a narrower core.
pub fn sharp_bump(r: f64, m: f64) -> f64 {
    let z = (r - 0.75) * 4.0;
    if z.abs() >= 1.0 {
        return 0.0;
    }
    (m * (1.0 - 1.0 / (1.0 - z * z))).exp()
}

pub fn sharp_bump_derivative(r: f64, m: f64) -> f64 {
    let z = (r - 0.75) * 4.0;
    if z.abs() >= 1.0 {
        return 0.0;
    }
    let w = 1.0 - z * z;
    sharp_bump(r, m) * m * (-2.0 * z / (w * w)) * 4.0
}

fn check_resolution(grid: GridSpec, required: usize) -> Result<()> {
    if grid.n() < required {
        return Err(Error::Resolution {
            n: grid.n(),
            required,
        });
    }
    Ok(())
}

/// Sharpness of the spatial profile `φ`. With the plain bump the Fourier
/// tail of `sin(ρ/ν^{1/3}) φ(ρ)` is so heavy that spectral derivatives carry
/// O(1) errors at 16 points per wavelength; `m = 16` brings the Euler
/// residual `U·∇Ω` to ~3e-5 at ν = 1e-3, n = 384.
pub const PHI_SHARPNESS: f64 = 16.0;

/// Sharpness of the time profile `γ`; 5 roughly minimizes `max |γ'''|`,
/// which sets the error of finite-difference time derivatives.
pub const GAMMA_SHARPNESS: f64 = 5.0;

pub fn phi(r: f64) -> f64 {
    sharp_bump(r, PHI_SHARPNESS)
}

pub fn phi_derivative(r: f64) -> f64 {
    sharp_bump_derivative(r, PHI_SHARPNESS)
}

pub fn gamma(t: f64) -> f64 {
    sharp_bump(t, GAMMA_SHARPNESS)
}

pub fn gamma_derivative(t: f64) -> f64 {
    sharp_bump_derivative(t, GAMMA_SHARPNESS)
}

/// Oscillating vortex family `u^ν = γ(t) U`, `U = x⊥/|x|² sin(|x|/ν^{1/3}) φ(|x|)`,
/// with forcing `f^ν = ∂t u^ν − νΔu^ν`. `x` is measured from the centre of
/// the fundamental domain `[−π, π)²`.
///
/// The vorticity `Ω = S'(ρ)/ρ` is sampled pointwise and `U` is its
/// Biot–Savart velocity, so `U` is exactly divergence-free and `curl U = Ω`
/// on the grid. Both agree with the pointwise formulas up to spectral
/// truncation error.
#[derive(Debug, Clone)]
pub struct Counterexample {
    grid: GridSpec,
    nu: f64,
    velocity_profile: VelocityField,
    vorticity_profile: SpectralField,
    lap_velocity: VelocityField,
    lap_vorticity: SpectralField,
}

impl Counterexample {
    /// Smallest even `n` with `n ≥ 16 ν^{-1/3}`.
    pub fn required_n(nu: f64) -> Result<usize> {
        if !(nu > 0.0) {
            return Err(Error::Domain(format!("counterexample needs ν > 0, got {nu}")));
        }
        let raw = (16.0 * nu.powf(-1.0 / 3.0) * (1.0 - 1e-9)).ceil() as usize;
        Ok(raw + raw % 2)
    }

    pub fn new(grid: GridSpec, nu: f64) -> Result<Self> {
        check_resolution(grid, Self::required_n(nu)?)?;
        let a = nu.cbrt();
        let n = grid.n();
        let mut w = Vec::with_capacity(grid.len());
        for iy in 0..n {
            let y = grid.centered_coord(iy);
            for ix in 0..n {
                let x = grid.centered_coord(ix);
                let rho = (x * x + y * y).sqrt();
                let p = phi(rho);
                if p == 0.0 {
                    w.push(0.0);
                    continue;
                }
                let ds = (rho / a).cos() / a * p + (rho / a).sin() * phi_derivative(rho);
                w.push(ds / rho);
            }
        }
        let vorticity_profile = SpectralField::from_values(grid, w).without_mean();
        let velocity_profile = biot_savart(&vorticity_profile)?;
        let lap_velocity = velocity_profile.laplacian();
        let lap_vorticity = vorticity_profile.laplacian();
        Ok(Self {
            grid,
            nu,
            velocity_profile,
            vorticity_profile,
            lap_velocity,
            lap_vorticity,
        })
    }

    /// Closed-form `U(x)` with `x` in centred coordinates.
    pub fn velocity_formula(nu: f64, x: f64, y: f64) -> (f64, f64) {
        let rho = (x * x + y * y).sqrt();
        let p = phi(rho);
        if p == 0.0 {
            return (0.0, 0.0);
        }
        let h = (rho / nu.cbrt()).sin() * p / (rho * rho);
        (-y * h, x * h)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// The stationary Euler profile `U`.
    pub fn velocity_profile(&self) -> &VelocityField {
        &self.velocity_profile
    }

    /// `Ω = curl U = S'(ρ)/ρ` with `S = sin(ρ/ν^{1/3}) φ(ρ)`.
    pub fn vorticity_profile(&self) -> &SpectralField {
        &self.vorticity_profile
    }

    pub fn velocity(&self, t: f64) -> VelocityField {
        self.velocity_profile.scaled(gamma(t))
    }

    pub fn vorticity(&self, t: f64) -> SpectralField {
        self.vorticity_profile.scaled(gamma(t))
    }

    /// `f^ν(t) = γ'(t) U − ν γ(t) ΔU`.
    pub fn forcing_velocity(&self, t: f64) -> VelocityField {
        &self.velocity_profile.scaled(gamma_derivative(t)) - &self.lap_velocity.scaled(self.nu * gamma(t))
    }

    /// `g^ν(t) = γ'(t) Ω − ν γ(t) ΔΩ`.
    pub fn forcing_vorticity(&self, t: f64) -> SpectralField {
        &self.vorticity_profile.scaled(gamma_derivative(t)) - &self.lap_vorticity.scaled(self.nu * gamma(t))
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        TrajectorySample::new(t, self.vorticity(t))
    }
}

/// The solver sees `g^ν`; the velocity forcing paired against `u` is its
/// Biot–Savart velocity, so the discrete energy identity is consistent.
impl Forcing for Counterexample {
    fn curl_coeffs(&self, grid: GridSpec, t: f64) -> Vec<Complex> {
        let (d, l) = (gamma_derivative(t), self.nu * gamma(t));
        if grid == self.grid {
            self.vorticity_profile
                .coeffs()
                .iter()
                .zip(self.lap_vorticity.coeffs())
                .map(|(w, lw)| w * d - lw * l)
                .collect()
        } else {
            match Counterexample::new(grid, self.nu) {
                Ok(other) => other.curl_coeffs(grid, t),
                Err(_) => vec![Complex::new(0.0, 0.0); grid.len()],
            }
        }
    }
}

/// `(u^ν(t), f^ν(t))` of the oscillating vortex family.
pub fn counterexample_family(grid: GridSpec, nu: f64, t: f64) -> Result<(VelocityField, VelocityField)> {
    let c = Counterexample::new(grid, nu)?;
    Ok((c.velocity(t), c.forcing_velocity(t)))
}

/// Rearrangement classes of [`vorticity_family`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    /// `f*(s) ∝ s^{-1/(2p)}`
    Lp(f64),
    /// `f*(s) ∝ 1/(σ(1 + ln 1/σ)^{1+2/q})`, `σ = s/s_max`
    Lorentz(f64),
    /// `f*(s) ∝ 1/(σ(1 + ln 1/σ)^{α+2})`
    LlogL(f64),
}

impl FamilyKind {
    fn validate(self) -> Result<()> {
        match self {
            FamilyKind::Lp(p) if !(p > 1.0) => Err(Error::Domain(format!("p = {p} must exceed 1"))),
            FamilyKind::Lorentz(q) if !(1.0..=2.0).contains(&q) => {
                Err(Error::Domain(format!("q = {q} must lie in [1, 2]")))
            }
            FamilyKind::LlogL(a) if !(a > 0.5) => Err(Error::Domain(format!("alpha = {a} must exceed 1/2"))),
            _ => Ok(()),
        }
    }

    /// Target rearrangement as a function of `σ = s/s_max ∈ (0, 1]`.
    fn profile(self, sigma: f64) -> f64 {
        let l = 1.0 + (1.0 / sigma).ln();
        match self {
            FamilyKind::Lp(p) => sigma.powf(-1.0 / (2.0 * p)),
            FamilyKind::Lorentz(q) => 1.0 / (sigma * l.powf(1.0 + 2.0 / q)),
            FamilyKind::LlogL(a) => 1.0 / (sigma * l.powf(a + 2.0)),
        }
    }
}

/// Radius of each blob of [`vorticity_family`].
pub const FAMILY_RADIUS: f64 = 1.5;

/// Number of annular layers; the innermost disc has area `s_max / 2^LAYERS`.
pub const FAMILY_LAYERS: usize = 8;

/// Layer values `v_j` and outer areas `s_j = s_max 2^{-j}` of one blob,
/// `j = 0..=FAMILY_LAYERS` (the last entry is the innermost disc).
pub fn family_layers(kind: FamilyKind, amplitude: f64) -> Vec<(f64, f64)> {
    let s_max = PI * FAMILY_RADIUS * FAMILY_RADIUS;
    (0..=FAMILY_LAYERS)
        .map(|j| {
            let sigma = 0.5f64.powi(j as i32);
            (sigma * s_max, amplitude * kind.profile(sigma / core::f64::consts::SQRT_2))
        })
        .collect()
}

/// Two antisymmetric radially layered blobs centred at a seeded lattice
/// point `c` and at `c + (π, π)`; the grid mean is zero up to round-off.
pub fn vorticity_family(grid: GridSpec, kind: FamilyKind, amplitude: f64, seed: u64) -> Result<SpectralField> {
    kind.validate()?;
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, v): (f64, f64) = (rng.gen(), rng.gen());
    let cx = ((u * n as f64) as usize).min(n - 1);
    let cy = ((v * n as f64) as usize).min(n - 1);
    let layers = family_layers(kind, amplitude);
    let value_at_area = |s: f64| -> f64 {
        if s > layers[0].0 {
            return 0.0;
        }
        let mut value = layers[0].1;
        for &(area, v) in &layers {
            if s <= area {
                value = v;
            } else {
                break;
            }
        }
        value
    };
    let h = grid.h();
    let periodic = |i: usize, c: usize| -> f64 {
        let d = (i + n - c) % n;
        d.min(n - d) as f64 * h
    };
    let mut values = vec![0.0; grid.len()];
    let centres = [(cx, cy, 1.0), ((cx + n / 2) % n, (cy + n / 2) % n, -1.0)];
    for (ccx, ccy, sign) in centres {
        for iy in 0..n {
            let dy = periodic(iy, ccy);
            for ix in 0..n {
                let dx = periodic(ix, ccx);
                let s = PI * (dx * dx + dy * dy);
                values[grid.flat(ix, iy)] += sign * value_at_area(s);
            }
        }
    }
    Ok(SpectralField::from_values(grid, values))
}

/// Random-phase field with `|ω̂(k)| = |k|^{-slope}` on `0 < |k| ≤ k_max`.
///
/// Phases are drawn per mode in a grid-independent order, so one seed gives
/// the same continuum field on every admissible grid. `slope = ∞` keeps only
/// the `|k| = 1` shell.
pub fn random_smooth_field(grid: GridSpec, seed: u64, slope: f64, k_max: f64) -> Result<SpectralField> {
    if !(k_max >= 1.0) {
        return Err(Error::Domain(format!("k_max = {k_max} must be at least 1")));
    }
    if 3.0 * k_max > grid.n() as f64 {
        return Err(Error::Domain(format!(
            "k_max = {k_max} exceeds the dealiased band n/3 = {}",
            grid.n() as f64 / 3.0
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex::new(0.0, 0.0); grid.len()];
    let kk = k_max.floor() as i64;
    for ky in 0..=kk {
        for kx in -kk..=kk {
            if ky == 0 && kx <= 0 {
                continue;
            }
            let k = ((kx * kx + ky * ky) as f64).sqrt();
            if k > k_max {
                continue;
            }
            let theta: f64 = rng.gen_range(0.0..2.0 * PI);
            let amp = k.powf(-slope);
            let c = Complex::from_polar(amp, theta);
            let idx = grid.flat(grid.index_of(kx), grid.index_of(ky));
            let mirror = grid.flat(grid.index_of(-kx), grid.index_of(-ky));
            coeffs[idx] = c;
            coeffs[mirror] = c.conj();
        }
    }
    Ok(SpectralField::from_coeffs_unchecked(grid, coeffs))
}
