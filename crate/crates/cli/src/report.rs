//! Report and series files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use geb_core::io::write_atomic;
use serde::Serialize;

use crate::config::Settings;

/// Which side of the tolerance a value has to land on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Passes when `value < tolerance`.
    Max,
    /// Passes when `value ≥ tolerance`.
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `null` in the JSON when the quantity could not be computed.
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn max(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, bound: Bound::Max, pass: value < tolerance, note: None }
    }

    pub fn min(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, bound: Bound::Min, pass: value >= tolerance, note: None }
    }

    /// A yes/no outcome, recorded as a count of mismatches.
    pub fn exact(name: impl Into<String>, ok: bool) -> Self {
        Check::max(name, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Conventions every number in a report is stated in.
#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    pub units: &'static str,
    pub metric: &'static str,
    pub fft_spacetime: &'static str,
    pub fft_space: &'static str,
    pub grid: &'static str,
    pub momentum_operators: &'static str,
    pub heaviside: &'static str,
    pub boost: &'static str,
    pub dirac_branches: &'static str,
    pub mode_ordering: &'static str,
    pub tensor_layout: &'static str,
    pub field_files: &'static str,
}

pub const CONVENTIONS: Conventions = Conventions {
    units: "natural, hbar = c = 1",
    metric: "eta = diag(+1, -1, -1, -1)",
    fft_spacetime: "psi(p) = sum_x psi(x) exp(+i x.p) dV / (4 pi^2), x.p = x0 p0 - x1 p1 - x2 p2 - x3 p3",
    fft_space: "psi(p) = sum_x psi(x) exp(-i p.x) dV / (2 pi)^(3/2)",
    grid: "x_j = origin + (j - n/2) delta, p_m = (m - n/2) 2 pi / (n delta), j, m = 0..n-1",
    momentum_operators: "P0 = i d/dt, Pk = -i d/dx^k",
    heaviside: "theta(0) = 1",
    boost: "t' = gamma (t - v x), x' = gamma (x - v t)",
    dirac_branches: "sigma = 0, 2 negative energy; sigma = 1, 3 positive energy",
    mode_ordering: "Fock occupations listed in mode-id order; Dirac modes are 4 per momentum, sigma fastest; fermion sign (-1)^(occupied modes before k)",
    tensor_layout: "n-event tensors are row-major with event 1 slowest",
    field_files: geb_core::io::LAYOUT,
};

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub conventions: Conventions,
    pub settings: Settings,
    pub checks: Vec<Check>,
    pub series: Vec<String>,
    pub pass: bool,
}

/// Collects checks and series for one command and writes them under `dir`.
pub struct Recorder {
    dir: PathBuf,
    label: String,
    checks: Vec<Check>,
    series: Vec<String>,
}

impl Recorder {
    pub fn new(dir: &Path, label: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Recorder { dir: dir.to_path_buf(), label: label.into(), checks: Vec::new(), series: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// Runs one section; a library error becomes a failed check instead of
    /// aborting the command. Wall time goes to stderr, never into the files.
    pub fn section(&mut self, name: &str, f: impl FnOnce(&mut Recorder) -> anyhow::Result<()>) {
        let start = Instant::now();
        if let Err(e) = f(self) {
            self.checks.push(Check::exact(format!("{name}/completed"), false).with_note(format!("{e:#}")));
        }
        eprintln!("geb: {}/{} {:.3} s", self.label, name, start.elapsed().as_secs_f64());
    }

    /// Writes rows to `<name>.csv`, header from the row's field names.
    pub fn series<T: Serialize>(&mut self, name: &str, rows: &[T]) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        let file = format!("{name}.csv");
        write_atomic(&self.dir.join(&file), &bytes)?;
        self.series.push(file);
        Ok(())
    }

    pub fn finish(self, settings: &Settings) -> anyhow::Result<Report> {
        let pass = self.checks.iter().all(|c| c.pass);
        let report = Report {
            command: settings.command.name().into(),
            seed: settings.seed,
            tolerance_scale: settings.tolerance_scale,
            conventions: CONVENTIONS,
            settings: settings.clone(),
            checks: self.checks,
            series: self.series,
            pass,
        };
        write_json(&self.dir.join("report.json"), &report)?;
        Ok(report)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Check::max("a", 1e-7, 1e-6).pass);
        assert!(!Check::max("a", 1e-6, 1e-6).pass);
        assert!(!Check::max("a", f64::NAN, 1e-6).pass);
        assert!(Check::min("b", 0.5, 0.5).pass);
        assert!(!Check::min("b", f64::NAN, 0.5).pass);
        assert!(Check::exact("c", true).pass && !Check::exact("c", false).pass);
        let v = serde_json::to_value(Check::max("a", f64::NAN, 1.0)).unwrap();
        assert!(v["value"].is_null());
        assert_eq!(v["bound"], "max");
    }

    #[derive(Serialize)]
    struct Row {
        t: f64,
        name: &'static str,
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Recorder::new(dir.path(), "test").unwrap();
        r.series("rows", &[Row { t: 0.5, name: "a" }, Row { t: 1e-13, name: "b" }]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
        assert_eq!(text, "t,name\n0.5,a\n1e-13,b\n");
    }
}
