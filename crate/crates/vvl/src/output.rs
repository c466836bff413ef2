//! Files written by the commands and the manifest that inventories them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use vvl_core::solver::RunLedger;
use vvl_core::splitting::RateTable;

pub const LEDGER_HEADER: &str = "t,energy,enstrophy,dissipation_cum,work_cum,identity_residual";

/// Output directory that records the SHA-256 of every file written through it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Sub-directory sharing no state with `self`; fold it back with
    /// [`OutputDir::absorb`].
    pub fn subdir(&self, name: &str) -> io::Result<Self> {
        Self::create(self.root.join(name))
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes)?;
        self.files.insert(name.to_string(), hex_sha256(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Takes over the inventory of a sub-directory created by [`OutputDir::subdir`].
    pub fn absorb(&mut self, sub: OutputDir) {
        let prefix = sub
            .root
            .strip_prefix(&self.root)
            .map(|p| p.to_string_lossy().replace('\\', "/"))
            .unwrap_or_default();
        for (name, hash) in sub.files {
            let key = if prefix.is_empty() { name } else { format!("{prefix}/{name}") };
            self.files.insert(key, hash);
        }
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    /// Writes `manifest.json`; the manifest itself is not inventoried.
    pub fn finish(&self, config_echo: &str, command: &str, wall_time_s: f64) -> io::Result<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s,
            config: config_echo.to_string(),
            files: self
                .files
                .iter()
                .map(|(path, sha256)| FileEntry {
                    path: path.clone(),
                    sha256: sha256.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub wall_time_s: f64,
    /// Canonical config text, every key spelled out.
    pub config: String,
    /// Sorted by path.
    pub files: Vec<FileEntry>,
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Shortest round-tripping decimal form, so CSV output is exact and stable.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn ledger_csv(ledger: &RunLedger) -> String {
    let mut out = String::from(LEDGER_HEADER);
    out.push('\n');
    for i in 0..ledger.len() {
        let row = [
            ledger.times[i],
            ledger.energy[i],
            ledger.enstrophy[i],
            ledger.dissipation_cum[i],
            ledger.work_cum[i],
            ledger.identity_residual[i],
        ];
        let _ = writeln!(out, "{}", row.map(num).join(","));
    }
    out
}

/// Parses a ledger CSV back; `nu` is not part of the file.
pub fn parse_ledger_csv(text: &str, nu: f64) -> Option<RunLedger> {
    let mut lines = text.lines();
    if lines.next()? != LEDGER_HEADER {
        return None;
    }
    let mut ledger = RunLedger {
        nu,
        ..RunLedger::default()
    };
    for line in lines {
        let row: Vec<f64> = line.split(',').map(|s| s.parse().ok()).collect::<Option<_>>()?;
        if row.len() != 6 {
            return None;
        }
        ledger.times.push(row[0]);
        ledger.energy.push(row[1]);
        ledger.enstrophy.push(row[2]);
        ledger.dissipation_cum.push(row[3]);
        ledger.work_cum.push(row[4]);
        ledger.identity_residual.push(row[5]);
    }
    Some(ledger)
}

pub fn rates_csv(table: &RateTable) -> String {
    let mut out = String::from("dt,error,order_local\n");
    for r in &table.rows {
        let order = r.order_local.map(num).unwrap_or_default();
        let _ = writeln!(out, "{},{},{order}", num(r.dt), num(r.error));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct RateSummary {
    pub order_global: Option<f64>,
    pub regime: String,
}

pub fn rate_summary(table: &RateTable) -> RateSummary {
    RateSummary {
        order_global: table.order_global,
        regime: table.regime_name(),
    }
}

/// Rows `nu,series,psi_0..psi_k`.
pub fn pairings_csv(rows: &[(f64, &str, Vec<f64>)]) -> String {
    let width = rows.iter().map(|r| r.2.len()).max().unwrap_or(0);
    let mut out = String::from("nu,series");
    for j in 0..width {
        let _ = write!(out, ",psi_{j}");
    }
    out.push('\n');
    for (nu, series, values) in rows {
        let _ = write!(out, "{},{series}", num(*nu));
        for v in values {
            let _ = write!(out, ",{}", num(*v));
        }
        out.push('\n');
    }
    out
}

/// Directory name of one sweep member.
pub fn member_dir(nu: f64) -> String {
    format!("nu_{nu:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_csv_round_trips() {
        let ledger = RunLedger::from_samples(0.1, vec![0.0, 0.5, 1.0], vec![1.0, 0.9, 0.8], vec![2.0, 1.8, 1.7], &[0.0; 3]);
        let text = ledger_csv(&ledger);
        assert!(text.starts_with(LEDGER_HEADER));
        assert_eq!(parse_ledger_csv(&text, 0.1).unwrap(), ledger);
    }

    #[test]
    fn sha256_of_known_input() {
        assert_eq!(
            hex_sha256(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn subdir_inventory_is_prefixed() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path().join("run")).unwrap();
        let mut sub = out.subdir(&member_dir(1e-3)).unwrap();
        sub.write("ledger.csv", b"x").unwrap();
        out.absorb(sub);
        out.write("report.json", b"{}").unwrap();
        let keys: Vec<_> = out.files().keys().cloned().collect();
        assert_eq!(keys, vec!["nu_1e-3/ledger.csv", "report.json"]);
        assert!(tmp.path().join("run/nu_1e-3/ledger.csv").exists());
    }
}
