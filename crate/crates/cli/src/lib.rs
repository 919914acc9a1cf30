//! Scenario runner for the geb-core verification suites.
//!
//! Every command writes `report.json` and its CSV series into
//! `<out>/<command>/`. Reports carry no timings, so identical settings give
//! identical bytes.

pub mod config;
pub mod report;
pub mod scenarios;

use std::path::Path;

use serde::Serialize;

use config::{Command, ScenarioConfig, Settings};
use report::{Recorder, Report};

/// Exit status of a finished run.
pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

pub fn run_command(settings: &Settings, out: &Path) -> anyhow::Result<Report> {
    let mut rec = Recorder::new(&out.join(settings.command.name()), settings.command.name())?;
    scenarios::run(settings, &mut rec);
    rec.finish(settings)
}

pub fn run_evolve(settings: &Settings, trajectory: &Path, out: &Path) -> anyhow::Result<Report> {
    let mut rec = Recorder::new(&out.join(Command::Evolve.name()), Command::Evolve.name())?;
    scenarios::evolve::run(settings, trajectory, &mut rec);
    rec.finish(settings)
}

#[derive(Serialize)]
struct SuiteEntry {
    command: String,
    pass: bool,
    checks: usize,
    failed: Vec<String>,
}

#[derive(Serialize)]
struct SuiteSummary {
    seed: u64,
    commands: Vec<SuiteEntry>,
    pass: bool,
}

/// Runs every command with `base` and writes `suite.json` next to the
/// per-command directories.
pub fn run_suite(base: &ScenarioConfig, out: &Path) -> anyhow::Result<bool> {
    let mut entries = Vec::new();
    let mut seed = config::DEFAULT_SEED;
    for command in Command::ALL {
        let settings = base.for_suite(command).resolve(command)?;
        seed = settings.seed;
        let report = run_command(&settings, out)?;
        entries.push(SuiteEntry {
            command: command.name().into(),
            pass: report.pass,
            checks: report.checks.len(),
            failed: report.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect(),
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    report::write_json(&out.join("suite.json"), &SuiteSummary { seed, commands: entries, pass })?;
    Ok(pass)
}
