//! Line-oriented experiment configuration.
//!
//! A config file is a list of `section.key = value` lines; `#` starts a
//! comment. Every key is declared in [`SCHEMA`] together with its type and
//! default, except the per-kind parameters `scenario.<param>` and
//! `forcing.<param>`, which are validated against the scenario kind.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use vvl_core::diagnostics::ForcingMode;
use vvl_core::scenarios::{ScenarioKind, ScenarioRef};
use vvl_core::solver::SimulationConfig;
use vvl_core::GridSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Int,
    Float,
    FloatList,
    Bool,
    Text,
}

impl ValueType {
    fn describe(self) -> &'static str {
        match self {
            ValueType::Int => "a non-negative integer",
            ValueType::Float => "a number",
            ValueType::FloatList => "a comma-separated list of numbers",
            ValueType::Bool => "true or false",
            ValueType::Text => "text",
        }
    }
}

/// One documented configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub key: &'static str,
    pub ty: ValueType,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

const fn key(key: &'static str, ty: ValueType, default: Option<&'static str>, doc: &'static str) -> KeySpec {
    KeySpec { key, ty, default, doc }
}

pub const SCHEMA: &[KeySpec] = &[
    key("grid.n", ValueType::Int, None, "grid points per axis (even, >= 8)"),
    key("time.dt", ValueType::Float, None, "macro time step"),
    key("time.T", ValueType::Float, None, "final time"),
    key("time.snapshot_stride", ValueType::Int, Some("10"), "keep every k-th macro step"),
    key("physics.nu", ValueType::FloatList, None, "viscosity, or a list for sweeps"),
    key("physics.advection", ValueType::Bool, Some("true"), "false solves the forced heat equation"),
    key("scenario.kind", ValueType::Text, None, "initial data scenario"),
    key("forcing.kind", ValueType::Text, None, "forcing scenario"),
    key("output.dir", ValueType::Text, None, "output directory"),
    key("output.snapshots", ValueType::Bool, Some("true"), "write omega_<step>.vvl files"),
    key("output.plots", ValueType::Bool, Some("true"), "write SVG plots"),
    key("sweep.mode", ValueType::Text, Some("auto"), "strong_limit, weak_oscillatory or auto"),
    key("split.nu", ValueType::Float, Some("0.05"), "diffusivity of the split problem"),
    key("split.coarsest_steps", ValueType::Int, Some("8"), "outer steps at the coarsest level"),
    key("split.levels", ValueType::Int, Some("4"), "number of halvings studied (>= 3)"),
    key("split.inner_steps", ValueType::Int, Some("20"), "transport sub-steps per outer step"),
    key("split.samples_per_step", ValueType::Int, Some("4"), "samples per outer step"),
    key("split.beta_seed", ValueType::Int, Some("1"), "seed of the random smooth transported scalar"),
    key("diagnose.s_count", ValueType::Int, Some("32"), "log-spaced measures for M_s"),
    key("diagnose.lorentz_q", ValueType::FloatList, Some("1,1.5,2"), "Lorentz exponents"),
    key("diagnose.llogl_alpha", ValueType::FloatList, Some("1"), "Orlicz exponents"),
    key("diagnose.decay_delta", ValueType::FloatList, Some("0.01,0.1"), "decay functional cut-offs"),
    key("diagnose.radii", ValueType::FloatList, Some("0.1,0.5,1"), "structure-function radii"),
    key("dump.t", ValueType::Float, Some("0.75"), "time at which scenario-dump samples fields"),
];

fn spec_of(name: &str) -> Option<&'static KeySpec> {
    SCHEMA.iter().find(|k| k.key == name)
}

/// How the sweep report treats the forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Auto,
    Fixed(ForcingMode),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSection {
    pub nu: f64,
    pub coarsest_steps: usize,
    pub levels: usize,
    pub inner_steps: usize,
    pub samples_per_step: usize,
    pub beta_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseSection {
    pub s_count: usize,
    pub lorentz_q: Vec<f64>,
    pub llogl_alpha: Vec<f64>,
    pub decay_delta: Vec<f64>,
    pub radii: Vec<f64>,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub nus: Vec<f64>,
    pub advection: bool,
    pub scenario: ScenarioRef,
    pub forcing: ScenarioRef,
    pub output_dir: PathBuf,
    pub snapshots: bool,
    pub plots: bool,
    pub sweep_mode: SweepMode,
    pub split: SplitSection,
    pub diagnose: DiagnoseSection,
    pub dump_t: f64,
}

/// Raw `key → (line, value)` pairs.
type Entries = BTreeMap<String, (usize, String)>;

fn parse_lines(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `section.key = value`, found `{content}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !k.contains('.') || k.starts_with('.') || k.ends_with('.') {
            return Err(ConfigError::Parse {
                line,
                message: format!("key `{k}` is not of the form section.key"),
            });
        }
        if let Some((prev, _)) = entries.insert(k.to_string(), (line, v.to_string())) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{k}` (first set on line {prev})"),
            });
        }
    }
    Ok(entries)
}

fn parse_float(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| !v.is_nan())
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(parse_float).collect()
}

/// Checks the value against the key's type; `line` 0 marks an override.
fn check_type(name: &str, ty: ValueType, value: &str, line: usize) -> Result<(), ConfigError> {
    let ok = match ty {
        ValueType::Int => value.parse::<usize>().is_ok(),
        ValueType::Float => parse_float(value).is_some(),
        ValueType::FloatList => parse_list(value).is_some_and(|l| !l.is_empty()),
        ValueType::Bool => matches!(value, "true" | "false"),
        ValueType::Text => !value.is_empty(),
    };
    if ok {
        return Ok(());
    }
    let message = format!("`{name}` expects {}, got `{value}`", ty.describe());
    Err(if line == 0 {
        ConfigError::Invalid {
            key: name.to_string(),
            message,
        }
    } else {
        ConfigError::Parse { line, message }
    })
}

struct Reader<'a> {
    entries: &'a Entries,
}

impl Reader<'_> {
    fn raw(&self, name: &'static str) -> Result<&str, ConfigError> {
        let spec = spec_of(name).expect("key declared in SCHEMA");
        match (self.entries.get(name), spec.default) {
            (Some((_, v)), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ConfigError::Missing(spec.key)),
        }
    }

    fn int(&self, name: &'static str) -> Result<usize, ConfigError> {
        Ok(self.raw(name)?.parse().expect("type checked"))
    }

    fn float(&self, name: &'static str) -> Result<f64, ConfigError> {
        Ok(parse_float(self.raw(name)?).expect("type checked"))
    }

    fn list(&self, name: &'static str) -> Result<Vec<f64>, ConfigError> {
        Ok(parse_list(self.raw(name)?).expect("type checked"))
    }

    fn flag(&self, name: &'static str) -> Result<bool, ConfigError> {
        Ok(self.raw(name)? == "true")
    }

    fn scenario(&self, section: &'static str) -> Result<ScenarioRef, ConfigError> {
        let kind_key = if section == "scenario" { "scenario.kind" } else { "forcing.kind" };
        let name = self.raw(kind_key)?;
        let kind = ScenarioKind::from_name(name).ok_or_else(|| ConfigError::Invalid {
            key: kind_key.to_string(),
            message: format!(
                "unknown kind `{name}`; expected one of {}",
                ScenarioKind::ALL.map(|k| k.name()).join(", ")
            ),
        })?;
        let mut scenario = ScenarioRef::new(kind);
        let prefix = format!("{section}.");
        for (k, (line, v)) in self.entries.range(prefix.clone()..) {
            let Some(param) = k.strip_prefix(&prefix) else { break };
            if param == "kind" {
                continue;
            }
            if !kind.param_defaults().iter().any(|(p, _)| *p == param) {
                return Err(unknown_key(k, *line));
            }
            let value = parse_float(v).ok_or_else(|| ConfigError::Parse {
                line: *line,
                message: format!("`{k}` expects a number, got `{v}`"),
            })?;
            scenario.params.insert(param.to_string(), value);
        }
        scenario.validate().map_err(|e| ConfigError::Invalid {
            key: prefix + "*",
            message: e.to_string(),
        })?;
        Ok(scenario)
    }
}

fn unknown_key(k: &str, line: usize) -> ConfigError {
    let message = format!("unknown key `{k}`");
    if line == 0 {
        ConfigError::Invalid {
            key: k.to_string(),
            message,
        }
    } else {
        ConfigError::Parse { line, message }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

impl Config {
    pub fn parse_file(path: &Path) -> Result<Self, ConfigError> {
        Self::parse_with_overrides(path, &[])
    }

    /// Parses `path`, then applies `section.key=value` overrides.
    pub fn parse_with_overrides(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str_with_overrides(&text, overrides)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        Self::parse_str_with_overrides(text, &[])
    }

    pub fn parse_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut entries = parse_lines(text)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| invalid(o, "override must look like section.key=value"))?;
            entries.insert(k.trim().to_string(), (0, v.trim().to_string()));
        }
        Self::from_entries(&entries)
    }

    fn from_entries(entries: &Entries) -> Result<Self, ConfigError> {
        for (k, (line, v)) in entries {
            match spec_of(k) {
                Some(spec) => check_type(k, spec.ty, v, *line)?,
                None if k.starts_with("scenario.") || k.starts_with("forcing.") => {}
                None => return Err(unknown_key(k, *line)),
            }
        }
        let r = Reader { entries };
        let n = r.int("grid.n")?;
        if n % 2 == 1 || n < 8 {
            return Err(line_or_invalid(entries, "grid.n", format!("grid.n = {n} must be even and at least 8")));
        }
        let dt = r.float("time.dt")?;
        let t_final = r.float("time.T")?;
        if !(dt > 0.0 && t_final > 0.0) {
            return Err(invalid("time.dt", "time.dt and time.T must be positive"));
        }
        let nus = r.list("physics.nu")?;
        if nus.iter().any(|nu| *nu < 0.0 || !nu.is_finite()) {
            return Err(invalid("physics.nu", "viscosities must be finite and non-negative"));
        }
        let snapshot_stride = r.int("time.snapshot_stride")?;
        if snapshot_stride == 0 {
            return Err(invalid("time.snapshot_stride", "must be positive"));
        }
        let sweep_mode = match r.raw("sweep.mode")? {
            "auto" => SweepMode::Auto,
            "strong_limit" => SweepMode::Fixed(ForcingMode::StrongLimit),
            "weak_oscillatory" => SweepMode::Fixed(ForcingMode::WeakOscillatory),
            other => return Err(invalid("sweep.mode", format!("unknown mode `{other}`"))),
        };
        let split = SplitSection {
            nu: r.float("split.nu")?,
            coarsest_steps: r.int("split.coarsest_steps")?,
            levels: r.int("split.levels")?,
            inner_steps: r.int("split.inner_steps")?,
            samples_per_step: r.int("split.samples_per_step")?,
            beta_seed: r.int("split.beta_seed")? as u64,
        };
        if split.levels < 3 || split.coarsest_steps == 0 || split.inner_steps == 0 || split.samples_per_step < 2 {
            return Err(invalid(
                "split.*",
                "need levels >= 3, coarsest_steps >= 1, inner_steps >= 1, samples_per_step >= 2",
            ));
        }
        if split.nu.is_nan() || split.nu <= 0.0 {
            return Err(invalid("split.nu", "must be positive"));
        }
        let diagnose = DiagnoseSection {
            s_count: r.int("diagnose.s_count")?,
            lorentz_q: r.list("diagnose.lorentz_q")?,
            llogl_alpha: r.list("diagnose.llogl_alpha")?,
            decay_delta: r.list("diagnose.decay_delta")?,
            radii: r.list("diagnose.radii")?,
        };
        if diagnose.s_count == 0 {
            return Err(invalid("diagnose.s_count", "must be positive"));
        }
        Ok(Self {
            n,
            dt,
            t_final,
            snapshot_stride,
            nus,
            advection: r.flag("physics.advection")?,
            scenario: r.scenario("scenario")?,
            forcing: r.scenario("forcing")?,
            output_dir: PathBuf::from(r.raw("output.dir")?),
            snapshots: r.flag("output.snapshots")?,
            plots: r.flag("output.plots")?,
            sweep_mode,
            split,
            diagnose,
            dump_t: r.float("dump.t")?,
        })
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.n).expect("n validated at parse time")
    }

    /// Solver configuration for one member of the viscosity list.
    pub fn simulation(&self, nu: f64) -> SimulationConfig {
        SimulationConfig {
            grid: self.grid(),
            nu,
            dt: self.dt,
            t_final: self.t_final,
            initial: self.scenario.clone(),
            forcing: self.forcing.clone(),
            snapshot_stride: self.snapshot_stride,
            advection: self.advection,
        }
    }

    /// Forcing mode of the sweep report; `auto` picks the oscillatory mode
    /// for the counterexample forcing.
    pub fn forcing_mode(&self) -> ForcingMode {
        match self.sweep_mode {
            SweepMode::Fixed(m) => m,
            SweepMode::Auto if self.forcing.kind == ScenarioKind::Counterexample => ForcingMode::WeakOscillatory,
            SweepMode::Auto => ForcingMode::StrongLimit,
        }
    }

    /// Canonical text with every key spelled out; parses back to `self`.
    pub fn emit(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mode = match self.sweep_mode {
            SweepMode::Auto => "auto",
            SweepMode::Fixed(ForcingMode::StrongLimit) => "strong_limit",
            SweepMode::Fixed(ForcingMode::WeakOscillatory) => "weak_oscillatory",
        };
        let mut values: BTreeMap<&str, String> = BTreeMap::new();
        values.insert("grid.n", self.n.to_string());
        values.insert("time.dt", format!("{:?}", self.dt));
        values.insert("time.T", format!("{:?}", self.t_final));
        values.insert("time.snapshot_stride", self.snapshot_stride.to_string());
        values.insert("physics.nu", list(&self.nus));
        values.insert("physics.advection", self.advection.to_string());
        values.insert("scenario.kind", self.scenario.kind.name().to_string());
        values.insert("forcing.kind", self.forcing.kind.name().to_string());
        values.insert("output.dir", self.output_dir.display().to_string());
        values.insert("output.snapshots", self.snapshots.to_string());
        values.insert("output.plots", self.plots.to_string());
        values.insert("sweep.mode", mode.to_string());
        values.insert("split.nu", format!("{:?}", self.split.nu));
        values.insert("split.coarsest_steps", self.split.coarsest_steps.to_string());
        values.insert("split.levels", self.split.levels.to_string());
        values.insert("split.inner_steps", self.split.inner_steps.to_string());
        values.insert("split.samples_per_step", self.split.samples_per_step.to_string());
        values.insert("split.beta_seed", self.split.beta_seed.to_string());
        values.insert("diagnose.s_count", self.diagnose.s_count.to_string());
        values.insert("diagnose.lorentz_q", list(&self.diagnose.lorentz_q));
        values.insert("diagnose.llogl_alpha", list(&self.diagnose.llogl_alpha));
        values.insert("diagnose.decay_delta", list(&self.diagnose.decay_delta));
        values.insert("diagnose.radii", list(&self.diagnose.radii));
        values.insert("dump.t", format!("{:?}", self.dump_t));

        let mut out = String::new();
        let mut section = "";
        for spec in SCHEMA {
            let this = spec.key.split('.').next().unwrap_or("");
            if this != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = this;
            }
            let _ = writeln!(out, "{} = {}", spec.key, values[spec.key]);
            let params = match spec.key {
                "scenario.kind" => Some(("scenario", &self.scenario)),
                "forcing.kind" => Some(("forcing", &self.forcing)),
                _ => None,
            };
            if let Some((prefix, s)) = params {
                for (k, v) in &s.params {
                    let _ = writeln!(out, "{prefix}.{k} = {v:?}");
                }
            }
        }
        out
    }

    /// Human-readable schema with defaults, one key per line.
    pub fn schema_text() -> String {
        let mut out = String::new();
        for spec in SCHEMA {
            let default = spec.default.unwrap_or("(required)");
            let _ = writeln!(out, "{:<24} {:<10} {}", spec.key, default, spec.doc);
        }
        out
    }
}

fn line_or_invalid(entries: &Entries, key: &str, message: String) -> ConfigError {
    match entries.get(key) {
        Some((line, _)) if *line > 0 => ConfigError::Parse { line: *line, message },
        _ => invalid(key, message),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
grid.n = 32
time.dt = 0.01
time.T = 0.5
physics.nu = 0.01
scenario.kind = taylor_green
forcing.kind = zero
output.dir = out
";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = Config::parse_str(MINIMAL).unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.nus, vec![0.01]);
        assert_eq!(c.snapshot_stride, 10);
        assert!(c.advection && c.snapshots && c.plots);
        assert_eq!(c.split.levels, 4);
        assert_eq!(c.diagnose.lorentz_q, vec![1.0, 1.5, 2.0]);
        assert_eq!(c.forcing_mode(), ForcingMode::StrongLimit);
    }

    #[test]
    fn emit_round_trips() {
        let text = format!("{MINIMAL}scenario.amplitude = 2.5\nsweep.mode = weak_oscillatory\n");
        let c = Config::parse_str(&text).unwrap();
        let again = Config::parse_str(&c.emit()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.scenario.param("amplitude"), Some(2.5));
    }

    #[test]
    fn odd_grid_is_rejected_with_its_line() {
        let text = MINIMAL.replace("grid.n = 32", "grid.n = 65");
        let err = Config::parse_str(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
        assert!(err.to_string().contains("grid.n"), "{err}");
    }

    #[test]
    fn viscosity_list_makes_a_sweep() {
        let text = MINIMAL.replace("physics.nu = 0.01", "physics.nu = 1e-2,5e-3,2.5e-3");
        assert_eq!(Config::parse_str(&text).unwrap().nus, vec![1e-2, 5e-3, 2.5e-3]);
    }

    #[test]
    fn errors_name_the_problem() {
        let missing = MINIMAL.replace("time.T = 0.5\n", "");
        assert!(matches!(Config::parse_str(&missing), Err(ConfigError::Missing("time.T"))));

        let unknown = format!("{MINIMAL}grid.m = 3\n");
        let err = Config::parse_str(&unknown).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 8, .. }), "{err}");

        let typed = MINIMAL.replace("time.dt = 0.01", "time.dt = fast");
        assert!(matches!(Config::parse_str(&typed), Err(ConfigError::Parse { line: 2, .. })));

        let param = format!("{MINIMAL}scenario.p = 3\n");
        assert!(Config::parse_str(&param).is_err());

        let dup = format!("{MINIMAL}grid.n = 16\n");
        assert!(Config::parse_str(&dup).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn overrides_replace_file_values() {
        let c = Config::parse_str_with_overrides(MINIMAL, &["grid.n=64".into(), "physics.nu = 0,0.1".into()]).unwrap();
        assert_eq!(c.n, 64);
        assert_eq!(c.nus, vec![0.0, 0.1]);
        let err = Config::parse_str_with_overrides(MINIMAL, &["grid.bogus=1".into()]).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("# header\n\n{}", MINIMAL.replace("grid.n = 32", "grid.n = 32   # points"));
        assert_eq!(Config::parse_str(&text).unwrap().n, 32);
    }
}
