//! The five harness commands.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::Serialize;
use vvl_core::diagnostics::{self, balance_report, test_family, BalanceReport, SweepResult};
use vvl_core::rearrangement::{self, RearrangementProfile};
use vvl_core::scenarios::{self, random_smooth_field, Counterexample, ScenarioKind};
use vvl_core::solver::{self, Forcing, Run, RunLedger, TrajectorySample};
use vvl_core::splitting::{self, FrozenVelocity, SplitConfig};
use vvl_core::{SpectralField, VelocityField};

use crate::config::{Config, ConfigError};
use crate::output::{self, OutputDir};
use crate::plot;
use crate::snapshot::{self, FieldKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Simulate,
    Sweep,
    Split,
    Diagnose,
    ScenarioDump,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Split => "split",
            Command::Diagnose => "diagnose",
            Command::ScenarioDump => "scenario-dump",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] vvl_core::Error),
}

/// What a command produced. `failures` lists runs or probes that did not
/// complete; their partial output is on disk regardless.
#[derive(Debug)]
pub struct Outcome {
    pub files: BTreeMap<String, String>,
    pub failures: Vec<String>,
    pub report: Option<BalanceReport>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn execute(command: Command, config: &Config) -> Result<Outcome, HarnessError> {
    let start = Instant::now();
    let mut out = OutputDir::create(&config.output_dir)?;
    let mut failures = Vec::new();
    let mut report = None;
    match command {
        Command::Simulate => simulate(config, &mut out, &mut failures)?,
        Command::Sweep => report = sweep(config, &mut out, &mut failures)?,
        Command::Split => split(config, &mut out)?,
        Command::Diagnose => diagnose(config, &mut out, &mut failures)?,
        Command::ScenarioDump => scenario_dump(config, &mut out)?,
    }
    out.finish(&config.emit(), command.name(), start.elapsed().as_secs_f64())?;
    Ok(Outcome {
        files: out.files().clone(),
        failures,
        report,
    })
}

fn single_nu(config: &Config, command: &str) -> Result<f64, HarnessError> {
    match config.nus.as_slice() {
        [nu] => Ok(*nu),
        _ => Err(ConfigError::Invalid {
            key: "physics.nu".into(),
            message: format!("`{command}` takes one viscosity; use `sweep` for a list"),
        }
        .into()),
    }
}

/// Macro step index of a sample time, matching the solver's equal steps.
fn step_index(config: &Config, t: f64) -> usize {
    let steps = ((config.t_final / config.dt) - 1e-9).ceil().max(1.0);
    (t / (config.t_final / steps)).round() as usize
}

/// Writes the ledger, snapshots and energy plot of one run.
fn persist_run(config: &Config, out: &mut OutputDir, run: &Run) -> std::io::Result<()> {
    out.write("ledger.csv", output::ledger_csv(&run.ledger).as_bytes())?;
    if config.snapshots {
        for sample in &run.trajectory {
            let mut bytes = Vec::new();
            snapshot::write_field(&mut bytes, FieldKind::Vorticity, &sample.omega)?;
            out.write(&format!("omega_{}.vvl", step_index(config, sample.t)), &bytes)?;
        }
    }
    Ok(())
}

fn write_plot(out: &mut OutputDir, name: &str, plot: &plot::Plot) {
    if let Err(e) = out.write(name, plot.to_svg().as_bytes()) {
        log::warn!("plot {name} not written: {e}");
    }
}

fn run_member(config: &Config, nu: f64) -> (Run, Option<String>) {
    match solver::run(&config.simulation(nu)) {
        Ok(run) => (run, None),
        Err(e) => {
            let message = format!("ν = {nu:e}: failed at t = {}: {}", e.t, e.source);
            (*e.partial, Some(message))
        }
    }
}

fn simulate(config: &Config, out: &mut OutputDir, failures: &mut Vec<String>) -> Result<(), HarnessError> {
    let nu = single_nu(config, "simulate")?;
    let (run, failure) = run_member(config, nu);
    persist_run(config, out, &run)?;
    if config.plots {
        write_plot(out, "energy.svg", &plot::energy_plot(&[(nu, &run.ledger.times, &run.ledger.energy)]));
    }
    failures.extend(failure);
    Ok(())
}

/// Worker count: `VVL_THREADS` if set, otherwise the available parallelism,
/// never more than the number of jobs.
pub fn thread_count(jobs: usize) -> usize {
    let cap = std::env::var("VVL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(jobs).max(1)
}

struct Member {
    nu: f64,
    run: Run,
    failure: Option<String>,
    out: OutputDir,
}

fn sweep(config: &Config, out: &mut OutputDir, failures: &mut Vec<String>) -> Result<Option<BalanceReport>, HarnessError> {
    let mut nus = config.nus.clone();
    nus.sort_by(|a, b| b.total_cmp(a));
    nus.dedup();
    let subdirs = nus
        .iter()
        .map(|&nu| out.subdir(&output::member_dir(nu)))
        .collect::<Result<Vec<_>, _>>()?;
    let slots: Vec<Mutex<Option<OutputDir>>> = subdirs.into_iter().map(|d| Mutex::new(Some(d))).collect();
    let results: Vec<Mutex<Option<Member>>> = nus.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let io_error: Mutex<Option<std::io::Error>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..thread_count(nus.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= nus.len() {
                    break;
                }
                let nu = nus[i];
                log::info!("sweep member ν = {nu:e}");
                let (run, failure) = run_member(config, nu);
                let mut dir = slots[i].lock().expect("slot lock").take().expect("each slot taken once");
                if let Err(e) = persist_run(config, &mut dir, &run) {
                    io_error.lock().expect("error lock").get_or_insert(e);
                }
                *results[i].lock().expect("result lock") = Some(Member {
                    nu,
                    run,
                    failure,
                    out: dir,
                });
            });
        }
    });
    if let Some(e) = io_error.into_inner().expect("error lock") {
        return Err(e.into());
    }

    let members: Vec<Member> = results
        .into_iter()
        .map(|m| m.into_inner().expect("result lock").expect("every member ran"))
        .collect();
    let mut done = SweepResult {
        nus: Vec::new(),
        ledgers: Vec::new(),
        trajectories: Vec::new(),
    };
    let mut pairings = Vec::new();
    let mut energy = Vec::new();
    for m in members {
        out.absorb(m.out);
        energy.push((m.nu, m.run.ledger.times.clone(), m.run.ledger.energy.clone()));
        if let Some(f) = m.failure {
            failures.push(f);
            continue;
        }
        pairings.extend(pairing_rows(config, m.nu, &m.run.trajectory)?);
        done.nus.push(m.nu);
        done.ledgers.push(m.run.ledger);
        done.trajectories.push(m.run.trajectory);
    }
    out.write("pairings.csv", output::pairings_csv(&pairings).as_bytes())?;

    let report = if done.nus.is_empty() {
        None
    } else {
        let report = balance_report(&done, config.forcing_mode())?;
        out.write_json("report.json", &report)?;
        Some(report)
    };
    if config.plots {
        let curves: Vec<(f64, &[f64], &[f64])> = energy.iter().map(|(nu, t, e)| (*nu, &t[..], &e[..])).collect();
        write_plot(out, "energy.svg", &plot::energy_plot(&curves));
        if let Some(r) = &report {
            write_plot(out, "zeta.svg", &plot::zeta_plot(&r.nus, &r.zeta_t));
            write_plot(out, "gaps.svg", &plot::gaps_plot(&r.nus, &r.l2l2_gaps, &r.ctl2_gaps));
        }
    }
    Ok(report)
}

/// `(ν, series, pairings)`, one row of pairings.csv.
type PairingRow = (f64, &'static str, Vec<f64>);

/// `∫₀^T ⟨u, ψ_j⟩ dt` and `∫₀^T ⟨f, ψ_j⟩ dt` over the snapshot times.
fn pairing_rows(
    config: &Config,
    nu: f64,
    trajectory: &[TrajectorySample],
) -> Result<Vec<PairingRow>, HarnessError> {
    let Some(first) = trajectory.first() else {
        return Ok(Vec::new());
    };
    let grid = first.omega.grid();
    let tests = test_family(grid);
    let forcing = scenarios::forcing(&config.forcing, grid, nu)?;
    let velocity: Vec<(f64, VelocityField)> = trajectory.iter().map(|s| (s.t, s.velocity())).collect();
    let force: Vec<(f64, VelocityField)> = trajectory
        .iter()
        .map(|s| (s.t, forcing.velocity_field(grid, s.t)))
        .collect();
    Ok(vec![
        (nu, "velocity", diagnostics::weak_pairing_probe(&velocity, &tests)?),
        (nu, "forcing", diagnostics::weak_pairing_probe(&force, &tests)?),
    ])
}

fn split(config: &Config, out: &mut OutputDir) -> Result<(), HarnessError> {
    let grid = config.grid();
    let s = &config.split;
    let u0 = scenarios::initial_vorticity(&config.scenario, grid, s.nu)?;
    let velocity = Arc::new(FrozenVelocity(vvl_core::field::biot_savart(&u0)?));
    let forcing: Arc<dyn Forcing> = Arc::from(scenarios::forcing(&config.forcing, grid, s.nu)?);
    let beta0 = random_smooth_field(grid, s.beta_seed, 2.0, 4.0)?;
    let mut base = SplitConfig::new(beta0, s.nu, config.t_final, config.t_final, velocity.clone(), forcing.clone());
    base.samples_per_step = s.samples_per_step;
    base.inner_dt = None;
    let first = s.coarsest_steps.next_power_of_two().trailing_zeros();
    if s.coarsest_steps != 1 << first {
        return Err(ConfigError::Invalid {
            key: "split.coarsest_steps".into(),
            message: "must be a power of two".into(),
        }
        .into());
    }
    let dts = splitting::halving_steps(config.t_final, first, first + s.levels as u32 - 1);
    let inner = |dt: f64| dt / s.inner_steps as f64;
    let table = splitting::convergence_study(&SplitConfig { inner_dt: Some(inner(dts[0])), ..base.clone() }, &dts)?;
    out.write("rates.csv", output::rates_csv(&table).as_bytes())?;
    out.write_json("rates.json", &output::rate_summary(&table))?;

    let mut defects = String::from("dt,defect_max\n");
    for &dt in &dts {
        let cfg = SplitConfig {
            inner_dt: Some(inner(dt)),
            ..base.with_dt(dt)
        };
        let run = splitting::split_run(&cfg)?;
        let worst = splitting::defect_norm(&run, velocity.as_ref(), forcing.as_ref(), s.nu)?
            .into_iter()
            .fold(0.0, |m, (_, d)| f64::max(m, d));
        defects.push_str(&format!("{dt:?},{worst:?}\n"));
    }
    out.write("defects.csv", defects.as_bytes())?;
    Ok(())
}

/// Rearrangement norms of one field keyed by their parameters.
#[derive(Debug, Serialize)]
pub struct NormReport {
    pub l1: f64,
    pub lorentz: BTreeMap<String, f64>,
    pub llogl: BTreeMap<String, f64>,
    pub decay: BTreeMap<String, f64>,
}

pub fn norm_report(config: &Config, f: &SpectralField) -> Result<NormReport, vvl_core::Error> {
    let p: RearrangementProfile = rearrangement::profile(f);
    let key = |v: f64| format!("{v}");
    Ok(NormReport {
        l1: p.l1_norm(),
        lorentz: config
            .diagnose
            .lorentz_q
            .iter()
            .map(|&q| Ok((key(q), p.lorentz_norm(q)?)))
            .collect::<Result<_, vvl_core::Error>>()?,
        llogl: config
            .diagnose
            .llogl_alpha
            .iter()
            .map(|&a| Ok((key(a), rearrangement::llogl_norm(f, a)?)))
            .collect::<Result<_, vvl_core::Error>>()?,
        decay: config
            .diagnose
            .decay_delta
            .iter()
            .map(|&d| Ok((key(d), p.decay_functional(d)?)))
            .collect::<Result<_, vvl_core::Error>>()?,
    })
}

#[derive(Debug, Serialize)]
struct DiagnoseReport {
    nu: f64,
    apriori_max_violation: f64,
    apriori_tolerance: f64,
    structure_function_final: BTreeMap<String, f64>,
    identity_residual_max: f64,
}

fn diagnose(config: &Config, out: &mut OutputDir, failures: &mut Vec<String>) -> Result<(), HarnessError> {
    let nu = single_nu(config, "diagnose")?;
    let grid = config.grid();
    let (run, failure) = run_member(config, nu);
    persist_run(config, out, &run)?;
    if let Some(f) = failure {
        failures.push(f);
        return Ok(());
    }
    let (first, last) = match (run.trajectory.first(), run.trajectory.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(()),
    };
    out.write_json("norms_initial.json", &norm_report(config, &first.omega)?)?;
    out.write_json("norms_final.json", &norm_report(config, &last.omega)?)?;

    let forcing = scenarios::forcing(&config.forcing, grid, nu)?;
    let s = rearrangement::log_spaced_measures(grid, config.diagnose.s_count);
    let violation = rearrangement::apriori_bound_check(&run.trajectory, forcing.as_ref(), &s)?;
    let tolerance = 5e-3 * first.omega.l1_norm();
    if violation > tolerance {
        failures.push(format!("a priori bound violated by {violation:e} (tolerance {tolerance:e})"));
    }
    let u = last.velocity();
    let structure_function_final = config
        .diagnose
        .radii
        .iter()
        .map(|&r| Ok((format!("{r}"), diagnostics::structure_function(&u, r)?)))
        .collect::<Result<_, vvl_core::Error>>()?;
    out.write_json(
        "diagnose.json",
        &DiagnoseReport {
            nu,
            apriori_max_violation: violation,
            apriori_tolerance: tolerance,
            structure_function_final,
            identity_residual_max: run.ledger.max_abs_identity_residual(),
        },
    )?;
    Ok(())
}

fn save(out: &mut OutputDir, name: &str, kind: FieldKind, f: &SpectralField) -> std::io::Result<()> {
    let mut bytes = Vec::new();
    snapshot::write_field(&mut bytes, kind, f)?;
    out.write(name, &bytes).map(|_| ())
}

fn scenario_dump(config: &Config, out: &mut OutputDir) -> Result<(), HarnessError> {
    let grid = config.grid();
    let nu = config.nus[0];
    let omega0 = scenarios::initial_vorticity(&config.scenario, grid, nu)?;
    let u0 = vvl_core::field::biot_savart(&omega0)?;
    save(out, "omega0.vvl", FieldKind::Vorticity, &omega0)?;
    save(out, "ux0.vvl", FieldKind::VelocityX, &u0.ux)?;
    save(out, "uy0.vvl", FieldKind::VelocityY, &u0.uy)?;
    let forcing = scenarios::forcing(&config.forcing, grid, nu)?;
    save(out, "forcing.vvl", FieldKind::Forcing, &forcing.vorticity_field(grid, config.dump_t))?;
    if config.scenario.kind == ScenarioKind::Counterexample {
        let ce = Counterexample::new(grid, nu)?;
        let u = ce.velocity(config.dump_t);
        save(out, "omega_t.vvl", FieldKind::Vorticity, &ce.vorticity(config.dump_t))?;
        save(out, "ux_t.vvl", FieldKind::VelocityX, &u.ux)?;
        save(out, "uy_t.vvl", FieldKind::VelocityY, &u.uy)?;
    }
    Ok(())
}

/// Ledger of every member of a finished sweep directory, ordered as written.
pub fn read_sweep_ledgers(root: &std::path::Path, nus: &[f64]) -> std::io::Result<Vec<RunLedger>> {
    nus.iter()
        .map(|&nu| {
            let text = std::fs::read_to_string(root.join(output::member_dir(nu)).join("ledger.csv"))?;
            output::parse_ledger_csv(&text, nu)
                .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "malformed ledger"))
        })
        .collect()
}
